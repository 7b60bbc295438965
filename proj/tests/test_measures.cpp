#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mg/errors.hpp"
#include "mg/game.hpp"
#include "mg/measures.hpp"
#include "mg/rng.hpp"

using namespace mg;

namespace {

/// Hand-built stationary window of i.i.d. demand samples: the estimators
/// only see the accumulators, so a synthetic series with known moments makes
/// an exact calibration target the engine could never provide.
TimeSeries synthetic_series(double mu_y, double sd_y, long long steps, int P,
                            std::uint64_t seed) {
    TimeSeries ts;
    ts.N = 4;
    ts.P = P;
    ts.S = 2;
    ts.b = mu_y;
    ts.T = steps;
    ts.warmup = 0;
    ts.batch_len = 10LL * P;
    ts.mu_count.assign(P, 0);
    ts.mu_sum_A.assign(P, 0.0);
    ts.mu_sum_A2.assign(P, 0.0);
    ts.mu_sum_g.assign(P, 0.0);
    ts.x_total.assign(ts.N, 0);
    auto gen = make_stream(seed, Stream::misc);
    std::normal_distribution<double> nd(mu_y, sd_y);
    std::uniform_int_distribution<int> pick(0, P - 1);
    double by = 0.0, by2 = 0.0, bg = 0.0;
    long long in_batch = 0;
    std::vector<std::int32_t> bx(ts.N, 0);
    for (long long t = 0; t < steps; ++t) {
        double y = nd(gen);
        int m = pick(gen);
        ++ts.post_steps;
        ts.sum_y += y;
        ts.sum_y2 += y * y;
        ts.sum_g += y;
        ts.sum_g2 += y * y;
        ++ts.mu_count[m];
        ts.mu_sum_A[m] += y;
        ts.mu_sum_A2[m] += y * y;
        ts.mu_sum_g[m] += y;
        by += y;
        by2 += y * y;
        bg += y;
        ++in_batch;
        if (in_batch == ts.batch_len) {
            ts.batch_y_sum.push_back(by);
            ts.batch_y2_sum.push_back(by2);
            ts.batch_g_sum.push_back(bg);
            ts.x_batch.insert(ts.x_batch.end(), bx.begin(), bx.end());
            by = by2 = bg = 0.0;
            in_batch = 0;
        }
    }
    return ts;
}

}  // namespace

TEST_CASE("volatility recovers the moments of an i.i.d. demand stream") {
    // y ~ N(0.3, 1.2^2) about b = 0.3: sigma should estimate 1.2
    TimeSeries ts = synthetic_series(0.3, 1.2, 40000, 16, 21);
    Estimate sig = volatility(ts, 0.3);
    CHECK(sig.value == doctest::Approx(1.2).epsilon(0.02));
    CHECK(sig.se > 0.0);
    // the batch SE should track the i.i.d. prediction sd(y^2)/sqrt(n)/(2 sigma)
    double pred = std::sqrt(2.0 * 1.2 * 1.2 * 1.2 * 1.2 / 40000.0) / (2.0 * 1.2);
    CHECK(sig.se == doctest::Approx(pred).epsilon(0.5));
    // a wrong center inflates the estimate by the offset in quadrature
    Estimate off = volatility(ts, -0.7);
    CHECK(off.value == doctest::Approx(std::sqrt(1.2 * 1.2 + 1.0)).epsilon(0.02));
}

TEST_CASE("a unit random baseline gives sigma near 1") {
    TimeSeries ts = synthetic_series(0.0, 1.0, 20000, 8, 22);
    CHECK(volatility(ts, 0.0).value == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("gbar averages the response and its SE is calibrated") {
    TimeSeries ts = synthetic_series(0.25, 1.0, 40000, 16, 23);
    Estimate g = gbar(ts);
    CHECK(g.value == doctest::Approx(0.25).epsilon(0.1));
    CHECK(std::abs(g.value - 0.25) < 4.0 * g.se);
    double pred = 1.0 / std::sqrt(40000.0);
    CHECK(g.se == doctest::Approx(pred).epsilon(0.5));
}

TEST_CASE("empty stationary windows are refused everywhere") {
    TimeSeries ts;
    ts.N = 4;
    ts.P = 4;
    ts.S = 2;
    CHECK_THROWS_AS(volatility(ts, 0.0), EmptyWindow);
    CHECK_THROWS_AS(gbar(ts), EmptyWindow);
    CHECK_THROWS_AS(strategy_preferences(ts), EmptyWindow);
}

TEST_CASE("sign-decomposition observables refuse S != 2 runs") {
    GameConfig cfg;
    cfg.N = 32;
    cfg.P = 8;
    cfg.S = 3;
    cfg.T = 3000;
    cfg.warmup = 500;
    cfg.seed = 5;
    cfg.price = PriceFunction::linear({-30.0, 30.0});
    TimeSeries ts = run(cfg);
    CHECK_THROWS_AS(strategy_preferences(ts), WrongS);
    CHECK_THROWS_AS(decompose_volatility(ts, 0.0), WrongS);
}

TEST_CASE("starved information states make conditional estimates refuse") {
    GameConfig cfg;
    cfg.N = 32;
    cfg.P = 64;
    cfg.T = 600;
    cfg.warmup = 100;  // 500 visits over 64 states: some fall under 50
    cfg.seed = 6;
    cfg.price = PriceFunction::linear({-30.0, 30.0});
    TimeSeries ts = run(cfg);
    CHECK_THROWS_AS(conditional_market(ts, 0.0), InsufficientCoverage);
}

namespace {

GameConfig measured_run() {
    GameConfig cfg;
    cfg.N = 256;
    cfg.P = 512;  // alpha = 2
    cfg.T = 102400;
    cfg.warmup = 51200;
    cfg.seed = 77;
    cfg.price = PriceFunction::linear({-40.0, 40.0});
    return cfg;
}

}  // namespace

TEST_CASE("the q_x debias prices persistent decision chains correctly") {
    // Agents whose decisions are symmetric Markov chains have q_x = 0, but a
    // finite window measures mean(xbar^2) = Var(xbar) = (1+theta)/((1-theta) n)
    // for lag-1 autocorrelation theta.  The correction must recover that.
    const int N = 200;
    const long long n = 4096;
    const double theta = 0.5;
    TimeSeries ts;
    ts.N = N;
    ts.P = 8;
    ts.S = 2;
    ts.post_steps = n;
    ts.batch_len = 80;
    ts.x_total.assign(N, 0);
    ts.sign_stride = 1;
    ts.sign_samples = n;
    ts.x_sign.assign(static_cast<std::size_t>(n) * N, 0);
    auto gen = make_stream(99, Stream::misc);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < N; ++i) {
        std::int8_t s = u(gen) < 0.5 ? 1 : -1;
        for (long long k = 0; k < n; ++k) {
            if (u(gen) > (1.0 + theta) / 2.0) s = -s;
            ts.x_sign[static_cast<std::size_t>(k) * N + i] = s;
            ts.x_total[static_cast<std::size_t>(i)] += s;
        }
    }
    Preferences p = strategy_preferences(ts);
    const double expected = (1.0 + theta) / (1.0 - theta) / static_cast<double>(n);
    CHECK(p.q_x_raw == doctest::Approx(expected).epsilon(0.25));
    CHECK(p.correction == doctest::Approx(expected).epsilon(0.15));
    // most of the finite-window bias is removed
    CHECK(p.q_x.value < 0.35 * p.q_x_raw);
    CHECK(p.phi == 0.0);
}

TEST_CASE("observables of a real run are mutually consistent") {
    TimeSeries ts = run(measured_run());
    ObservableSet o = compute_observables(ts);
    CHECK(o.alpha == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(o.sigma * o.sigma == doctest::Approx(o.sigma2.value).epsilon(1e-12));
    CHECK(o.q_x.value > 0.0);
    CHECK(o.q_x.value < 1.0);
    CHECK(o.phi >= 0.0);
    CHECK(o.phi <= 1.0);
    CHECK(o.q_g > 0.0);
    CHECK(o.post_steps == 51200);
    CHECK(o.batches == 10);
    CHECK(o.tie_events == 0);

    // frozen fraction and raw q_x recomputed from the per-agent averages
    Preferences pref = strategy_preferences(ts);
    int frozen = 0;
    double qx = 0.0;
    for (double xb : pref.xbar) {
        if (std::abs(xb) >= 1.0 - kFrozenEps) ++frozen;
        qx += xb * xb;
    }
    CHECK(o.phi == doctest::Approx(frozen / 256.0).epsilon(1e-12));
    CHECK(pref.q_x_raw == doctest::Approx(qx / 256.0).epsilon(1e-12));
    // the finite-window bias on q_x is priced and subtracted
    CHECK(pref.correction > 0.0);
    CHECK(pref.correction < pref.q_x_raw);
    CHECK(pref.q_x.value == doctest::Approx(pref.q_x_raw - pref.correction)
                                .epsilon(1e-12));
    CHECK(o.q_x.value == doctest::Approx(pref.q_x.value).epsilon(1e-12));
    CHECK(o.q_x.se > 0.0);

    // at alpha = 2 a finite fraction of agents freezes
    CHECK(o.phi > 0.05);
    CHECK(o.phi < 0.6);
}

TEST_CASE("the visit-noise correction lowers q_A and stays positive") {
    TimeSeries ts = run(measured_run());
    ConditionalMarket cm = conditional_market(ts, 0.0);
    CHECK(cm.correction > 0.0);
    CHECK(cm.q_A.value < cm.q_A_raw);
    CHECK(cm.q_A.value == doctest::Approx(cm.q_A_raw - cm.correction).epsilon(1e-12));
    CHECK(cm.q_A.se > 0.0);
    // for a linear response g_mu == A_mu, so q_g matches raw q_A about 0
    CHECK(cm.q_g == doctest::Approx(cm.q_A_raw).epsilon(1e-9));
}

TEST_CASE("the volatility decomposition closes within its stated error") {
    TimeSeries ts = run(measured_run());
    VolatilityParts parts = decompose_volatility(ts, 0.0);
    CHECK(parts.noise_part == 0.0);
    CHECK(parts.switching_part > 0.0);
    CHECK(parts.info_part > 0.0);
    CHECK(parts.residual_se > 0.0);
    CHECK(std::abs(parts.residual) < 3.0 * parts.residual_se);
    CHECK(parts.total ==
          doctest::Approx(parts.noise_part + parts.switching_part +
                          parts.info_part + parts.residual)
              .epsilon(1e-12));
}

TEST_CASE("a single run lands near the stationary theory at alpha = 2") {
    TimeSeries ts = run(measured_run());
    ObservableSet o = compute_observables(ts);
    // independent scalar-reduction value at alpha = 2: sigma = 0.7441
    CHECK(std::abs(o.sigma - 0.744135) < 0.06);
    // mean response of a symmetric market is zero
    CHECK(std::abs(o.gbar_mean.value) < 5.0 * o.gbar_mean.se);
}

TEST_CASE("exogenous noise enters the decomposition as its variance") {
    GameConfig cfg = measured_run();
    cfg.noise = NoiseModel::gaussian(0.5);
    TimeSeries ts = run(cfg);
    VolatilityParts parts = decompose_volatility(ts, 0.0);
    CHECK(parts.noise_part == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(parts.residual) < 3.0 * parts.residual_se);
    // total volatility strictly above the noiseless run's
    TimeSeries ts0 = run(measured_run());
    CHECK(volatility(ts, 0.0).value > volatility(ts0, 0.0).value);
}
