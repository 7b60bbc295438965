#pragma once

#include <string>

#include "mg/config.hpp"

namespace mg {

/// Exit codes shared by the commands and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitReconciliation = 4;

/// Map a thrown error onto the exit-code contract (validation-class errors
/// give 2, numerical/convergence failures give 3).
int classify_error(const std::exception& e);

// Each command consumes a validated RunConfig, writes its files under
// config.out, prints a short summary to stdout, and returns an exit code.
// Errors are thrown; the CLI maps them via classify_error.

int cmd_simulate(const RunConfig& rc);
int cmd_solve(const RunConfig& rc);
int cmd_sweep(const RunConfig& rc);
int cmd_dynamics(const RunConfig& rc);
int cmd_compare(const RunConfig& rc);
int cmd_alpha_c(const RunConfig& rc);

/// Dispatch on rc.mode.
int run_command(const RunConfig& rc);

}  // namespace mg
