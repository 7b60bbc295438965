#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mg/noise.hpp"
#include "mg/price.hpp"
#include "mg/rng.hpp"

namespace mg {

/**
 * Full specification of one game run.  alpha = P/N is the control parameter;
 * warmup = -1 requests the default max(100*P, 10000).  T counts total steps
 * including warmup.  b biases the strategy-entry distribution so the mean
 * rescaled demand is b (a net producer drift the speculators feed on).
 */
struct GameConfig {
    int N = 0;
    int P = 0;
    int S = 2;
    double b = 0.0;
    PriceFunction price = PriceFunction::linear({-1e6, 1e6});
    NoiseModel noise = NoiseModel::none();
    long long T = 0;
    long long warmup = -1;
    std::uint64_t seed = 0;
    bool record_series = true;
    int excluded_agent = -1;  // if >= 0: that agent's action is removed from A

    double alpha() const { return static_cast<double>(P) / N; }
    long long effective_warmup() const;
    void validate() const;  // throws ConfigError on inconsistent settings
};

/**
 * Quenched strategy book.  entries are +-1 with P(+1) = (1 + b/sqrt(N))/2 so
 * E[A] = b.  Layout is per-information-state columns: all N*S entries for one
 * mu sit contiguously, giving the score update unit stride.
 *
 * For S = 2 the standard decomposition is precomputed:
 *   omega = (s0 + s1)/2 in {-1,0,+1}   (agreed component)
 *   xi    = (s0 - s1)/2 in {-1,0,+1}   (disputed component)
 * so an action is a_i = omega + xi * x_i with x_i = sign of the score gap.
 */
struct StrategyTable {
    int N = 0, P = 0, S = 0;
    std::vector<std::int8_t> entries;      // [(mu*N + i)*S + s]
    std::vector<std::int8_t> omega, xi;    // [mu*N + i], S=2 only
    std::vector<std::int32_t> omega_sum;   // [mu] column sums of omega

    std::int8_t entry(int i, int s, int mu) const {
        return entries[(static_cast<std::size_t>(mu) * N + i) * S + s];
    }
};

/// Snapshot of the evolving per-agent state.
struct GameState {
    long long t = 0;                  // steps taken so far
    std::vector<double> scores;       // [i*S + s] hindsight scores
    std::vector<double> score_gap;    // [i] exact U_{i,0} - U_{i,1} (S=2)
    std::vector<std::int8_t> x;       // [i] current sign decision (S=2)
    std::vector<std::int16_t> best;   // [i] current best strategy index
};

/**
 * Everything a run records.  Per-step columns are kept only when
 * record_series is set; the stationary accumulators (post-warmup) are always
 * filled, so ensemble sweeps can run with tiny memory.  Batches of length
 * 10*P feed standard-error estimates downstream.
 */
struct TimeSeries {
    // run identity (copied from config, embedded in outputs)
    int N = 0, P = 0, S = 0;
    double b = 0.0;
    long long T = 0, warmup = 0;
    std::uint64_t seed = 0;
    double noise_variance = 0.0;
    std::string price_desc, noise_desc;
    bool record_series = true;

    // per-step columns over all T steps (warmup steps are the first `warmup`)
    std::vector<double> A, g, eta;
    std::vector<std::int32_t> mu;

    // stationary accumulators over the post-warmup window
    long long post_steps = 0;
    long long batch_len = 0;
    double sum_y = 0.0, sum_y2 = 0.0;  // y = A + eta (demand before response)
    double sum_g = 0.0, sum_g2 = 0.0;
    std::vector<long long> mu_count;           // [P]
    std::vector<double> mu_sum_A, mu_sum_A2;   // [P]
    std::vector<double> mu_sum_g;              // [P]
    std::vector<long long> x_total;            // [N] sum of x_i, S=2 only
    std::vector<double> batch_y_sum, batch_y2_sum, batch_g_sum;  // per batch
    std::vector<std::int32_t> x_batch;         // [batch*N + i] raw sums

    // Per-state visit sums restricted to the first and last 40% of the
    // window (rows 0 and 1 of a 2 x P layout).  The product of the two
    // partial means estimates (A_mu - b)^2 without the upward sampling bias
    // a squared full-window mean carries, and unlike an independent-visit
    // correction it stays honest when consecutive visits are correlated
    // (decision correlation times are of order P, the visit spacing).
    long long part_lo = 0, part_hi = 0;        // split points in post steps
    std::vector<long long> mu_part_count;      // [part*P + mu]
    std::vector<double> mu_part_sum_A;         // [part*P + mu]

    long long tie_events = 0;  // exact score ties resolved to lower index

    long long batches() const { return static_cast<long long>(batch_y_sum.size()); }
};

/// Per-step view handed to observers (valid only during the callback).
struct EngineView {
    long long t;
    std::int32_t mu;
    double eta, A, g;
    int N, S;
    const std::int8_t* x;        // S=2: current decisions after the update
    const double* score_gap;     // S=2
    const double* scores;        // materialized N*S scores
    const std::int8_t* omega_col, *xi_col;  // current mu's columns (S=2)
};

/// Hook for recording dynamics beyond the standard TimeSeries.
struct StepObserver {
    virtual ~StepObserver() = default;
    virtual void on_step(const EngineView& v) = 0;
};

/// Draw the quenched strategy book for a config (rng: strategies stream).
StrategyTable draw_strategies(const GameConfig& cfg, std::mt19937_64& gen);

/// Initial hindsight scores: i.i.d. N(0, 1e-20) — a 1e-10-wide jitter whose
/// only purpose is deterministic symmetry breaking (rng: scores stream).
std::vector<double> init_scores(const GameConfig& cfg, std::mt19937_64& gen);

/**
 * The game engine: owns the quenched disorder and the evolving state, and
 * advances one information-state draw at a time.
 */
class Engine {
  public:
    explicit Engine(GameConfig cfg);

    struct StepResult {
        double A;  // rescaled excess demand (excluded agent removed if any)
        double g;  // price response to A + eta
    };

    /// Advance one step: actions from current scores at state mu, market
    /// response, hindsight update of all strategies' scores.
    StepResult step(std::int32_t mu, double eta);

    /// Drive T steps with the config's information/noise streams, recording
    /// a TimeSeries; the observer (optional) sees every step.
    TimeSeries run(StepObserver* obs = nullptr);

    const GameConfig& config() const { return cfg_; }
    const StrategyTable& strategies() const { return table_; }
    GameState state() const;  // snapshot copy
    long long tie_events() const { return tie_events_; }

  private:
    GameConfig cfg_;
    StrategyTable table_;
    std::vector<double> scores_;     // [i*S + s]
    std::vector<double> gap_;        // [i], S=2 exact score difference
    std::vector<std::int8_t> x_;     // [i], S=2
    std::vector<std::int16_t> best_; // [i], S>2 path
    long long t_ = 0;
    long long tie_events_ = 0;
    double inv_sqrt_n_ = 0.0;
};

/// One-call convenience: construct an engine and run it.
TimeSeries run(const GameConfig& cfg, StepObserver* obs = nullptr);

/**
 * Counterfactual pair used to measure one agent's market impact: the same
 * seeds run twice, once normally and once with `agent`'s action excluded
 * from the demand sum (its scores still update from the same price signal).
 */
std::pair<TimeSeries, TimeSeries> cavity_experiment(const GameConfig& cfg, int agent);

}  // namespace mg
