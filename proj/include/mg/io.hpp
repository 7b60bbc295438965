#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mg/cavity.hpp"
#include "mg/dynamics.hpp"
#include "mg/game.hpp"
#include "mg/measures.hpp"
#include "mg/stats.hpp"

namespace mg {

/// Shortest round-trip decimal form of a double ("%.17g" with trailing-zero
/// trimming is deliberately avoided: output must be byte-stable, so the full
/// 17 significant digits are always written).
std::string format_double(double v);

/// FNV-1a 64-bit hash of raw bytes, as 16 hex digits.  Keys every output to
/// the exact config file that produced it.
std::string fnv1a_hex(const std::string& bytes);

/// Create a directory (and parents); throws Error on failure.
void ensure_dir(const std::string& path);

/// Write a whole file; throws Error on failure.
void write_file(const std::string& path, const std::string& content);

/// Read a whole file; throws Error if missing.
std::string read_file(const std::string& path);

/// Provenance stamped into every output file.
struct OutputMeta {
    std::string config_hash;            // fnv1a_hex of the config bytes
    std::vector<std::uint64_t> seeds;   // every seed that fed the file
};

// ---- CSV emitters (deterministic; numbers via format_double) ----

/// Per-step series: t,mu,eta,A,g_t (requires record_series).
std::string timeseries_csv(const TimeSeries& ts);

/// Histogram: bin_center,density.
std::string histogram_csv(const Histogram& h);

/// One sweep row; status is "1" (converged), "0" (hit the iteration cap) or
/// "rsb" (refused below the transition) — refused rows keep their alpha and
/// carry nan observables rather than disappearing.
struct SweepRow {
    double alpha = 0.0;
    CavitySolution sol;
    std::string status = "1";
};

/// Sweep table: alpha,sigma,q_x,q_g,q_A,R_x,R_g,b,phi,converged.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Trajectories: t,agent_id,U,u_tau,sign (sign = sign of U at the sample).
std::string trajectory_csv(const TrajectoryRecord& rec);

// ---- JSON emitters (nlohmann ordered; stable key order) ----

std::string observables_json(const ObservableSet& obs, const TimeSeries& ts,
                             const OutputMeta& meta);
std::string solution_json(const CavitySolution& sol, const OutputMeta& meta);
std::string alpha_c_json(const AlphaCResult& res, const OutputMeta& meta);

// ---- compact binary round-trip (series columns + identity) ----

void write_timeseries_binary(const std::string& path, const TimeSeries& ts);
TimeSeries read_timeseries_binary(const std::string& path);

}  // namespace mg
