#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mg/cavity.hpp"
#include "mg/game.hpp"

namespace mg {

enum class Mode { simulate, solve, sweep, dynamics, compare, alpha_c };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);  // throws ConfigError on unknown names

/**
 * One YAML run recipe: a mode plus everything the corresponding command
 * needs.  load_config validates mode-specific requirements up front so a bad
 * recipe fails before any computation starts.
 */
struct RunConfig {
    Mode mode = Mode::simulate;

    GameConfig game;              // N, P, S, b, T, warmup, price, noise, seed
    int ensemble_size = 1;        // seeds game.seed, game.seed+1, ...
    int workers = 1;
    std::string out = "out";

    double alpha = 0.0;               // solve: single point
    std::vector<double> alpha_grid;   // sweep: strictly increasing, all > 0
    SolveOptions solve;               // solver knobs (defaults unless given)

    int tracked = 64;             // dynamics: how many agents to record
    double alpha_c_lo = 0.05;     // alpha-c: initial bracket
    double alpha_c_hi = 0.8;

    double compare_se_band = 3.0;   // compare: tolerance in combined SEs
    double compare_ks_tol = 0.02;   // compare: KS distance threshold
    double compare_b_override = std::numeric_limits<double>::quiet_NaN();
    // compare: when set, simulate with this entry bias instead of the
    // solver's own b (negative control: the gbar consistency check must flag
    // a deliberately wrong bias)

    std::string path;       // where the recipe was loaded from
    std::string raw_text;   // file bytes (hashed into every output)

    void validate() const;  // throws ConfigError naming the offending field
};

/// Parse and validate a YAML recipe file.  cli_mode, when given, supplies
/// the mode for recipes that omit it and must agree with one that is set.
RunConfig load_config(const std::string& path, const std::string* cli_mode = nullptr);

/// Parse a recipe from text (path only labels diagnostics).
RunConfig parse_config(const std::string& text, const std::string& path = "<inline>",
                       const std::string* cli_mode = nullptr);

/**
 * Default price operating range when the recipe gives none: wide enough for
 * anything a run can produce (|A| <= sqrt(N)) or the solver can probe
 * (quadrature nodes a few sigma out), with noise headroom.
 */
Interval default_price_range(int N, double noise_sd);

}  // namespace mg
