#pragma once

#include <vector>

#include "mg/game.hpp"

namespace mg {

/// Point estimate with a batch-based standard error (NaN when the window
/// holds fewer than two full batches).
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Frozen-agent threshold: |xbar| >= 1 - kFrozenEps counts as frozen.
inline constexpr double kFrozenEps = 0.01;

/// Minimum visits per information state for conditional estimates.
inline constexpr long long kMinStateVisits = 50;

/// Per-agent stationary strategy preferences (S = 2 runs only).  A finite
/// window inflates mean(xbar^2) by each agent's sampling variance of xbar,
/// and decision correlation times of order P make that variance hard to
/// price from autocovariances.  q_x therefore multiplies each agent's mean
/// over the first 40% of the window by the mean over the last 40%: the gap
/// decorrelates the two factors, so the product estimates xbar^2 without
/// the square's upward bias.  Both factors come from the 10P batch sums;
/// runs shorter than two batches fall back to the raw squared mean.
struct Preferences {
    std::vector<double> xbar;  // time-averaged sign decision per agent
    Estimate q_x;              // split-window product estimate of mean(xbar^2)
    double q_x_raw = 0.0;      // plain mean of squared window means
    double correction = 0.0;   // q_x_raw - q_x.value (implied bias removed)
    double phi = 0.0;          // frozen fraction
};

/// Stationary demand statistics conditioned on the information state.
/// q_A uses the same split-window product as q_x — (mean of A over the
/// state's first-40% visits) x (mean over its last-40% visits) — which
/// removes the visit-sampling bias of a squared mean even when consecutive
/// visits (spaced ~P steps) are correlated.  States missing a half (and
/// whole runs without the split sums) fall back to subtracting the
/// independent-visit sampling variance from the squared full-window mean.
struct ConditionalMarket {
    std::vector<double> A_mu;  // mean demand per state
    std::vector<double> g_mu;  // mean price response per state
    Estimate q_A;              // variance of A_mu about b, sampling-debiased
    double q_A_raw = 0.0;      // plain variance of full-window means about b
    double correction = 0.0;   // q_A_raw - q_A.value (implied bias removed)
    double q_g = 0.0;          // mean of g_mu^2
};

/// Additive decomposition of the squared volatility.
struct VolatilityParts {
    double total = 0.0;       // measured sigma^2
    double noise_part = 0.0;  // exogenous noise variance
    double switching_part = 0.0;  // (1 - q_x) / 2
    double info_part = 0.0;       // q_A
    double residual = 0.0;        // total - sum of parts
    double residual_se = 0.0;     // combined standard error of the residual
};

/// Everything at once, for output files and comparisons.
struct ObservableSet {
    int N = 0, P = 0, S = 0;
    double alpha = 0.0, b = 0.0;
    long long post_steps = 0, batches = 0, tie_events = 0;
    Estimate sigma2;
    double sigma = 0.0;
    Estimate q_x;
    double phi = 0.0;
    Estimate q_A;
    double q_g = 0.0;
    Estimate gbar_mean;
    VolatilityParts parts;
};

/// Volatility sigma: the RMS of A + eta about b over the stationary window,
/// i.e. sqrt(mean((A + eta - b)^2)), with a delta-method standard error.
Estimate volatility(const TimeSeries& ts, double b);

/// Time-averaged price response <g_t>; the market's mean arbitrage return.
Estimate gbar(const TimeSeries& ts);

/// Per-agent decision averages; throws WrongS unless S = 2.
Preferences strategy_preferences(const TimeSeries& ts);

/// Conditional means per information state; throws InsufficientCoverage when
/// any state has fewer than kMinStateVisits visits.
ConditionalMarket conditional_market(const TimeSeries& ts, double b);

/// sigma^2 = noise + switching + information content, with residual and SE.
VolatilityParts decompose_volatility(const TimeSeries& ts, double b);

/// Aggregate of all of the above (b taken from the run config).
ObservableSet compute_observables(const TimeSeries& ts);

}  // namespace mg
