#pragma once

#include <cstdint>
#include <vector>

#include "mg/game.hpp"
#include "mg/stats.hpp"

namespace mg {

/**
 * Sampled score-difference trajectories plus full-resolution per-agent
 * counters for a tracked subset of agents.  Everything needed to verify the
 * three-timescale structure of the score dynamics:
 *   t << P   random walk                (RMS exponent 1/2)
 *   t ~ P    bounded excursions         (|U| stays under sqrt(t))
 *   t >> P   effective binary switching (sign mean converges, fast mixing)
 */
struct TrajectoryRecord {
    int N = 0, P = 0, S = 0;
    long long T = 0;
    std::uint64_t seed = 0;

    std::vector<int> agent_ids;       // tracked agents
    std::vector<long long> times;     // sample schedule (sorted, unique)

    // flat [agent_index * times.size() + sample] arrays
    std::vector<double> U;            // score difference at sample times
    std::vector<double> u_tau;        // U / sqrt(P), the coarse-grained score
    std::vector<double> x_running;    // running mean of sign(U) up to t
    std::vector<std::int64_t> x_cum;  // running sum of sign(U) (exact)
    std::vector<std::int32_t> flips;  // cumulative sign-change count

    // sign matrix sampled every `sign_stride` steps: [sample * K + agent_index]
    long long sign_stride = 0;
    std::vector<std::int8_t> signs;
    long long sign_samples = 0;

    std::size_t idx(std::size_t agent_index, std::size_t sample) const {
        return agent_index * times.size() + sample;
    }
    /// First sample index with time >= t.
    std::size_t sample_at(long long t) const;
};

/// Standard recording schedule: every step up to 10^3, then 100 points per
/// decade, plus the landmark times (P, 10P, 50P, T/2, T) used by the tests.
std::vector<long long> standard_schedule(long long T, int P);

/// Run the engine once and record the tracked agents.  S = 2 only (the score
/// difference is the tracked object); throws WrongS before running otherwise.
TrajectoryRecord record_trajectories(const GameConfig& cfg,
                                     const std::vector<int>& ids,
                                     const std::vector<long long>& schedule);

/// Frozen/active split over the window [t_lo, T] by the running-mean
/// threshold |xbar| >= 1 - 0.01 (same rule as the measures module).
struct FrozenSplit {
    std::vector<bool> frozen;   // per tracked agent
    std::vector<double> xbar;   // over the window
    long long frozen_count = 0;
};
FrozenSplit classify_frozen(const TrajectoryRecord& rec, long long t_lo);

/**
 * Log-log fit of ensemble-RMS U against t over [t_lo, t_hi].  The ensemble
 * pools every (record, tracked agent) pair, optionally restricted per record
 * by `subset` (indices into agent_ids).  Throws InsufficientEnsemble when
 * fewer than min_pairs pairs or min_points sample times are available.
 */
struct RandomWalkResult {
    double slope = 0.0, slope_se = 0.0, intercept = 0.0;
    int points = 0;
    long long pairs = 0;
};
RandomWalkResult random_walk_test(const std::vector<TrajectoryRecord>& ens,
                                  long long t_lo, long long t_hi,
                                  const std::vector<std::vector<int>>* subset = nullptr,
                                  long long min_pairs = 100, int min_points = 20);

/**
 * Bounded-excursion statistics on [t_lo, t_hi] for non-frozen agents
 * (classification window [10P, T]): per-agent fraction of sample times with
 * |U| < sqrt(t), sign-alternation rate, and the frozen agents' quietness
 * after 10P.
 */
struct ExcursionResult {
    std::vector<double> fraction_inside;   // per non-frozen (record, agent)
    double median_fraction = 0.0;
    double mean_alternations_per_10P = 0.0;
    long long non_frozen = 0, frozen = 0;
    long long frozen_flips_after_10P = 0;  // total; 0 means frozen are quiet
};
ExcursionResult excursion_test(const std::vector<TrajectoryRecord>& ens,
                               long long t_lo, long long t_hi);

/**
 * Binary-switching checks on the stationary window [t_lo, T] from the sign
 * matrix: per-agent sign mean, the exact variance identity var = 1 - xbar^2,
 * and the sign autocorrelation at lag 10P for non-frozen agents.
 */
struct BinaryNoiseResult {
    std::vector<double> xbar;           // per (record, agent)
    std::vector<double> autocorr_10P;   // per non-frozen (record, agent)
    double max_variance_identity_gap = 0.0;
    double frac_autocorr_below = 0.0;   // fraction of non-frozen under 0.1
    long long non_frozen = 0;
};
BinaryNoiseResult binary_noise_test(const std::vector<TrajectoryRecord>& ens,
                                    long long t_lo);

/**
 * Streaming estimator of pairwise sign covariances.  Feed one +-1 row of K
 * tracked decisions per sample; rows are grouped into batches whose means
 * price each pair's sampling noise.  finish() reports the mean absolute
 * covariance both raw and noise-debiased (subtracting each pair's estimated
 * sampling variance in quadrature), over complete batches only.
 */
class GramAccumulator {
  public:
    GramAccumulator(int K, int batch_samples);
    void add(const std::int8_t* row);  // K entries, each +-1

    struct Pairwise {
        int pairs = 0;
        long long samples = 0, batches = 0;
        double mean_abs_cov_raw = 0.0;
        double mean_abs_cov = 0.0;           // noise-debiased
        double mean_noise_sd = 0.0;          // average per-pair sampling sd
        double max_self_identity_gap = 0.0;  // |var - (1 - xbar^2)|, ~0
    };
    Pairwise finish() const;

  private:
    int K_, nb_;
    long long samples_ = 0, batches_ = 0;
    int in_batch_ = 0;
    std::vector<std::int32_t> gram_;              // current batch, pairs i > j
    std::vector<double> sum_g_, sum_g2_;          // per-pair batch-sum moments
    std::vector<std::int64_t> agent_sum_;         // running per-agent sign sum
    std::vector<std::int64_t> agent_sum_batched_; // same, at last batch close
};

/**
 * Cross-agent decorrelation experiment: two runs at the same alpha with P
 * differing 4x; the mean absolute pairwise stationary covariance of x_i^t
 * should scale like 1/P.  Covariances are estimated from a strided sign
 * matrix with batch means supplying each pair's sampling noise, which is
 * subtracted in quadrature (the raw |cov| of the larger run is otherwise
 * dominated by its noise floor).  `ratio` uses the debiased magnitudes.
 */
struct DecorrelationSide {
    int N = 0, P = 0;
    long long window = 0;
    int pairs = 0;
    double mean_abs_cov_raw = 0.0;
    double mean_abs_cov = 0.0;     // noise-debiased
    double mean_noise_sd = 0.0;    // average per-pair sampling sd
};
struct DecorrelationResult {
    DecorrelationSide small, large;
    double ratio = 0.0;
};
DecorrelationResult cross_agent_decorrelation(const GameConfig& small_cfg,
                                              const GameConfig& large_cfg,
                                              int tracked);

}  // namespace mg
