#include "mg/measures.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mg/errors.hpp"

namespace mg {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_window(const TimeSeries& ts) {
    if (ts.post_steps <= 0)
        throw EmptyWindow("observable requested over an empty stationary window "
                          "(all steps were warmup)");
}

void require_two_strategies(const TimeSeries& ts) {
    if (ts.S != 2) {
        std::ostringstream os;
        os << "this observable is defined through the two-strategy sign "
              "decomposition, but the run used S = "
           << ts.S;
        throw WrongS(os.str());
    }
}

/// Jackknife standard error of a statistic recomputed from delete-one-batch
/// totals.  `stat(drop)` must return the statistic without batch `drop`.
template <class StatFn>
double jackknife_se(long long batches, StatFn&& stat) {
    if (batches < 2) return kNaN;
    double mean = 0.0;
    std::vector<double> vals(static_cast<std::size_t>(batches));
    for (long long d = 0; d < batches; ++d) {
        vals[static_cast<std::size_t>(d)] = stat(d);
        mean += vals[static_cast<std::size_t>(d)];
    }
    mean /= static_cast<double>(batches);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    double b = static_cast<double>(batches);
    return std::sqrt((b - 1.0) / b * ss);
}

/// Sampling variance of one agent's window-mean decision, from its strided
/// +-1 series (base points at the agent's first sample, consecutive samples
/// are `step` apart).  Var(mean) = (gamma_0 + 2 sum_t gamma_t) / n with the
/// autocovariance sum truncated at the first non-positive adjacent pair
/// (the initial-positive-sequence rule for means of correlated series).
/// A constant series -- a frozen agent -- gets exactly zero.
double mean_sampling_variance(const std::int8_t* base, long long n, long long step) {
    double sum = 0.0;
    for (long long k = 0; k < n; ++k) sum += base[k * step];
    const double m = sum / static_cast<double>(n);
    const double gamma0 = 1.0 - m * m;  // exact: the series is +-1
    if (gamma0 <= 0.0) return 0.0;

    auto gamma = [&](long long t) {
        double acc = 0.0;
        for (long long k = 0; k + t < n; ++k)
            acc += (base[k * step] - m) * (base[(k + t) * step] - m);
        return acc / static_cast<double>(n);
    };
    const long long t_max = std::min<long long>(n - 1, 2000);
    double tail = 0.0;
    for (long long t = 1; t + 1 <= t_max; t += 2) {
        const double pair = gamma(t) + gamma(t + 1);
        if (pair <= 0.0) break;
        tail += pair;
    }
    return (gamma0 + 2.0 * tail) / static_cast<double>(n);
}

}  // namespace

Estimate volatility(const TimeSeries& ts, double b) {
    require_window(ts);
    const double n = static_cast<double>(ts.post_steps);
    // sigma^2 = mean(y^2) - 2 b mean(y) + b^2, y = A + eta
    const double s2 = ts.sum_y2 / n - 2.0 * b * ts.sum_y / n + b * b;

    const long long B = ts.batches();
    double se2 = kNaN;
    if (B >= 2) {
        // jackknife over batches on the same formula
        const double len = static_cast<double>(ts.batch_len);
        double tot_y = 0.0, tot_y2 = 0.0;
        for (long long k = 0; k < B; ++k) {
            tot_y += ts.batch_y_sum[static_cast<std::size_t>(k)];
            tot_y2 += ts.batch_y2_sum[static_cast<std::size_t>(k)];
        }
        const double nb = len * static_cast<double>(B - 1);
        se2 = jackknife_se(B, [&](long long d) {
            double sy = tot_y - ts.batch_y_sum[static_cast<std::size_t>(d)];
            double sy2 = tot_y2 - ts.batch_y2_sum[static_cast<std::size_t>(d)];
            return sy2 / nb - 2.0 * b * sy / nb + b * b;
        });
    }
    Estimate e;
    e.value = std::sqrt(std::max(s2, 0.0));
    // delta method: se(sigma) = se(sigma^2) / (2 sigma)
    e.se = (e.value > 0.0 && std::isfinite(se2)) ? se2 / (2.0 * e.value) : kNaN;
    return e;
}

Estimate gbar(const TimeSeries& ts) {
    require_window(ts);
    Estimate e;
    e.value = ts.sum_g / static_cast<double>(ts.post_steps);
    const long long B = ts.batches();
    if (B >= 2) {
        const double len = static_cast<double>(ts.batch_len);
        double tot = 0.0;
        for (long long k = 0; k < B; ++k) tot += ts.batch_g_sum[static_cast<std::size_t>(k)];
        e.se = jackknife_se(B, [&](long long d) {
            return (tot - ts.batch_g_sum[static_cast<std::size_t>(d)]) /
                   (len * static_cast<double>(B - 1));
        });
    } else {
        e.se = kNaN;
    }
    return e;
}

Preferences strategy_preferences(const TimeSeries& ts) {
    require_two_strategies(ts);
    require_window(ts);
    const double n = static_cast<double>(ts.post_steps);
    Preferences p;
    p.xbar.resize(static_cast<std::size_t>(ts.N));
    double qx = 0.0;
    int frozen = 0;
    for (int i = 0; i < ts.N; ++i) {
        double xb = static_cast<double>(ts.x_total[static_cast<std::size_t>(i)]) / n;
        p.xbar[static_cast<std::size_t>(i)] = xb;
        qx += xb * xb;
        if (std::abs(xb) >= 1.0 - kFrozenEps) ++frozen;
    }
    p.q_x_raw = qx / ts.N;
    p.phi = static_cast<double>(frozen) / ts.N;

    // Debias: mean(xbar^2) carries each agent's sampling variance of xbar on
    // top of the stationary q_x.  Runs too short for the strided samples (or
    // hand-built series without them) skip the correction.
    double corr_se = 0.0;
    if (ts.sign_samples >= 16 &&
        ts.x_sign.size() ==
            static_cast<std::size_t>(ts.sign_samples) * static_cast<std::size_t>(ts.N)) {
        double sum_v = 0.0, sum_v2 = 0.0;
        for (int i = 0; i < ts.N; ++i) {
            const double v = mean_sampling_variance(ts.x_sign.data() + i,
                                                    ts.sign_samples, ts.N);
            sum_v += v;
            sum_v2 += v * v;
        }
        p.correction = sum_v / ts.N;
        const double var_v =
            std::max(0.0, sum_v2 / ts.N - p.correction * p.correction);
        corr_se = std::sqrt(var_v / ts.N);
    }
    p.q_x.value = std::max(p.q_x_raw - p.correction, 0.0);

    const long long B = ts.batches();
    if (B >= 2) {
        // per-agent totals over the batch-covered window (a partial trailing
        // batch is in x_total but not in x_batch, so don't mix the two)
        std::vector<double> tot(static_cast<std::size_t>(ts.N), 0.0);
        for (long long k = 0; k < B; ++k) {
            const std::int32_t* row =
                ts.x_batch.data() + static_cast<std::size_t>(k) * ts.N;
            for (int i = 0; i < ts.N; ++i) tot[static_cast<std::size_t>(i)] += row[i];
        }
        const double len = static_cast<double>(ts.batch_len);
        const double nb = len * static_cast<double>(B - 1);
        const double jk = jackknife_se(B, [&](long long d) {
            double acc = 0.0;
            const std::int32_t* drop = ts.x_batch.data() +
                                       static_cast<std::size_t>(d) * ts.N;
            for (int i = 0; i < ts.N; ++i) {
                double xb = (tot[static_cast<std::size_t>(i)] - drop[i]) / nb;
                acc += xb * xb;
            }
            return acc / ts.N;
        });
        p.q_x.se = std::sqrt(jk * jk + corr_se * corr_se);
    } else {
        p.q_x.se = kNaN;
    }
    return p;
}

ConditionalMarket conditional_market(const TimeSeries& ts, double b) {
    require_window(ts);
    // every state must be visited often enough for its mean to be meaningful
    long long starved = 0, min_count = std::numeric_limits<long long>::max();
    int first_starved = -1;
    for (int m = 0; m < ts.P; ++m) {
        long long c = ts.mu_count[static_cast<std::size_t>(m)];
        if (c < kMinStateVisits) {
            ++starved;
            if (first_starved < 0) first_starved = m;
        }
        min_count = std::min(min_count, c);
    }
    if (starved > 0) {
        std::ostringstream os;
        os << starved << " of " << ts.P << " information states have fewer than "
           << kMinStateVisits << " stationary visits (first: state "
           << first_starved << " with "
           << ts.mu_count[static_cast<std::size_t>(first_starved)]
           << "); lengthen the run to estimate conditional means";
        throw InsufficientCoverage(os.str());
    }

    ConditionalMarket cm;
    cm.A_mu.resize(static_cast<std::size_t>(ts.P));
    cm.g_mu.resize(static_cast<std::size_t>(ts.P));
    double qa = 0.0, qg = 0.0, corr = 0.0, var_qa = 0.0;
    for (int m = 0; m < ts.P; ++m) {
        const auto k = static_cast<std::size_t>(m);
        const double n = static_cast<double>(ts.mu_count[k]);
        const double Am = ts.mu_sum_A[k] / n;
        const double gm = ts.mu_sum_g[k] / n;
        cm.A_mu[k] = Am;
        cm.g_mu[k] = gm;
        qa += (Am - b) * (Am - b);
        qg += gm * gm;
        // within-state variance of A -> sampling variance of the mean;
        // subtracting it removes the O(1/visits) upward bias of qa
        const double v = (ts.mu_sum_A2[k] - ts.mu_sum_A[k] * ts.mu_sum_A[k] / n) /
                         (n - 1.0);
        corr += v / n;
        var_qa += 4.0 * (Am - b) * (Am - b) * v / n + 2.0 * (v / n) * (v / n);
    }
    cm.q_A_raw = qa / ts.P;
    cm.correction = corr / ts.P;
    cm.q_A.value = cm.q_A_raw - cm.correction;
    // delta method, treating visits as independent samples of A | state
    cm.q_A.se = std::sqrt(var_qa) / ts.P;
    cm.q_g = qg / ts.P;
    return cm;
}

VolatilityParts decompose_volatility(const TimeSeries& ts, double b) {
    require_two_strategies(ts);
    Estimate s2;
    {
        Estimate sig = volatility(ts, b);
        s2.value = sig.value * sig.value;
        s2.se = std::isfinite(sig.se) ? 2.0 * sig.value * sig.se : kNaN;
    }
    Preferences pref = strategy_preferences(ts);
    ConditionalMarket cm = conditional_market(ts, b);

    VolatilityParts parts;
    parts.total = s2.value;
    parts.noise_part = ts.noise_variance;
    parts.switching_part = 0.5 * (1.0 - pref.q_x.value);
    parts.info_part = cm.q_A.value;
    parts.residual =
        parts.total - parts.noise_part - parts.switching_part - parts.info_part;
    // independent-error combination; the (mild) positive correlations between
    // the three estimates only make this conservative
    double se = 0.0;
    if (std::isfinite(s2.se)) se += s2.se * s2.se;
    if (std::isfinite(pref.q_x.se)) se += 0.25 * pref.q_x.se * pref.q_x.se;
    if (std::isfinite(cm.q_A.se)) se += cm.q_A.se * cm.q_A.se;
    parts.residual_se = std::sqrt(se);
    return parts;
}

ObservableSet compute_observables(const TimeSeries& ts) {
    ObservableSet o;
    o.N = ts.N;
    o.P = ts.P;
    o.S = ts.S;
    o.alpha = static_cast<double>(ts.P) / ts.N;
    o.b = ts.b;
    o.post_steps = ts.post_steps;
    o.batches = ts.batches();
    o.tie_events = ts.tie_events;
    Estimate sig = volatility(ts, ts.b);
    o.sigma = sig.value;
    o.sigma2.value = sig.value * sig.value;
    o.sigma2.se = std::isfinite(sig.se) ? 2.0 * sig.value * sig.se : kNaN;
    o.gbar_mean = gbar(ts);
    if (ts.S == 2) {
        Preferences pref = strategy_preferences(ts);
        o.q_x = pref.q_x;
        o.phi = pref.phi;
    } else {
        o.q_x = {kNaN, kNaN};
        o.phi = kNaN;
    }
    ConditionalMarket cm = conditional_market(ts, ts.b);
    o.q_A = cm.q_A;
    o.q_g = cm.q_g;
    if (ts.S == 2) o.parts = decompose_volatility(ts, ts.b);
    return o;
}

}  // namespace mg
