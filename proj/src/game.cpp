#include "mg/game.hpp"

#include <cmath>
#include <sstream>

#include "mg/errors.hpp"

namespace mg {

long long GameConfig::effective_warmup() const {
    if (warmup >= 0) return warmup;
    return std::max<long long>(100LL * P, 10000LL);
}

void GameConfig::validate() const {
    std::ostringstream os;
    if (N < 1) {
        os << "N must be >= 1 (got " << N << ")";
        throw ConfigError(os.str());
    }
    if (P < 1) {
        os << "P must be >= 1 (got " << P << ")";
        throw ConfigError(os.str());
    }
    if (S < 2) {
        os << "S must be >= 2 (got " << S << ")";
        throw ConfigError(os.str());
    }
    if (T < 1) {
        os << "T must be >= 1 (got " << T << ")";
        throw ConfigError(os.str());
    }
    if (effective_warmup() >= T) {
        os << "warmup (" << effective_warmup() << ") must be < T (" << T
           << "); raise T or set warmup explicitly";
        throw ConfigError(os.str());
    }
    if (std::abs(b) > std::sqrt(static_cast<double>(N))) {
        os << "bias b = " << b << " exceeds sqrt(N); the entry distribution "
           << "P(+1) = (1 + b/sqrt(N))/2 would leave [0,1]";
        throw ConfigError(os.str());
    }
    if (excluded_agent >= N) {
        os << "excluded agent " << excluded_agent << " out of range (N = " << N << ")";
        throw ConfigError(os.str());
    }
}

StrategyTable draw_strategies(const GameConfig& cfg, std::mt19937_64& gen) {
    StrategyTable tab;
    tab.N = cfg.N;
    tab.P = cfg.P;
    tab.S = cfg.S;
    const std::size_t n_entries =
        static_cast<std::size_t>(cfg.P) * cfg.N * cfg.S;
    tab.entries.assign(n_entries, 0);

    // P(+1) = (1 + b/sqrt(N))/2 makes E[a_i] = b/sqrt(N), hence E[A] = b.
    const double p_plus = 0.5 * (1.0 + cfg.b / std::sqrt(static_cast<double>(cfg.N)));
    std::bernoulli_distribution plus(p_plus);

    // Draw in (agent, strategy, state) order: the table for agent i does not
    // depend on N or P layout choices, only on the draw count before it.
    for (int i = 0; i < cfg.N; ++i)
        for (int s = 0; s < cfg.S; ++s)
            for (int m = 0; m < cfg.P; ++m) {
                std::int8_t v = plus(gen) ? 1 : -1;
                tab.entries[(static_cast<std::size_t>(m) * cfg.N + i) * cfg.S + s] = v;
            }

    if (cfg.S == 2) {
        tab.omega.assign(static_cast<std::size_t>(cfg.P) * cfg.N, 0);
        tab.xi.assign(static_cast<std::size_t>(cfg.P) * cfg.N, 0);
        tab.omega_sum.assign(cfg.P, 0);
        for (int m = 0; m < cfg.P; ++m) {
            std::int32_t col = 0;
            for (int i = 0; i < cfg.N; ++i) {
                std::size_t e = (static_cast<std::size_t>(m) * cfg.N + i) * 2;
                std::int8_t s0 = tab.entries[e], s1 = tab.entries[e + 1];
                tab.omega[static_cast<std::size_t>(m) * cfg.N + i] =
                    static_cast<std::int8_t>((s0 + s1) / 2);
                tab.xi[static_cast<std::size_t>(m) * cfg.N + i] =
                    static_cast<std::int8_t>((s0 - s1) / 2);
                col += (s0 + s1) / 2;
            }
            tab.omega_sum[m] = col;
        }
    }
    return tab;
}

std::vector<double> init_scores(const GameConfig& cfg, std::mt19937_64& gen) {
    // Width 1e-10: far below any accumulated payoff, so the jitter only
    // breaks the initial ties and never influences a trained agent.
    std::normal_distribution<double> jitter(0.0, 1e-10);
    std::vector<double> u(static_cast<std::size_t>(cfg.N) * cfg.S);
    for (auto& v : u) v = jitter(gen);
    return u;
}

Engine::Engine(GameConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    auto strat_gen = make_stream(cfg_.seed, Stream::strategies);
    auto score_gen = make_stream(cfg_.seed, Stream::scores);
    table_ = draw_strategies(cfg_, strat_gen);
    scores_ = init_scores(cfg_, score_gen);
    inv_sqrt_n_ = 1.0 / std::sqrt(static_cast<double>(cfg_.N));

    best_.assign(cfg_.N, 0);
    if (cfg_.S == 2) {
        // The score gap is tracked exactly (update -2*xi*g is zero bitwise
        // when the strategies agree), so agents with identical strategies
        // keep their initial sign forever instead of losing it to float
        // cancellation in the materialized scores.
        gap_.assign(cfg_.N, 0.0);
        x_.assign(cfg_.N, 0);
        for (int i = 0; i < cfg_.N; ++i) {
            double d = scores_[2 * i] - scores_[2 * i + 1];
            gap_[i] = d;
            if (d > 0.0) {
                x_[i] = 1;
                best_[i] = 0;
            } else if (d < 0.0) {
                x_[i] = -1;
                best_[i] = 1;
            } else {
                x_[i] = 1;  // exact tie: lower strategy index
                best_[i] = 0;
                ++tie_events_;
            }
        }
    } else {
        for (int i = 0; i < cfg_.N; ++i) {
            int bst = 0;
            double top = scores_[static_cast<std::size_t>(i) * cfg_.S];
            for (int s = 1; s < cfg_.S; ++s) {
                double v = scores_[static_cast<std::size_t>(i) * cfg_.S + s];
                if (v > top) {
                    top = v;
                    bst = s;
                }
            }
            best_[i] = static_cast<std::int16_t>(bst);
        }
    }
}

Engine::StepResult Engine::step(std::int32_t mu, double eta) {
    if (mu < 0 || mu >= cfg_.P) throw Error("engine: information state out of range");
    const int N = cfg_.N;
    const int S = cfg_.S;
    const std::int8_t* col =
        table_.entries.data() + static_cast<std::size_t>(mu) * N * S;

    // --- actions and demand (decisions fixed by scores before this step) ---
    std::int32_t demand = 0;
    if (S == 2) {
        const std::int8_t* om = table_.omega.data() + static_cast<std::size_t>(mu) * N;
        const std::int8_t* xi = table_.xi.data() + static_cast<std::size_t>(mu) * N;
        std::int32_t disputed = 0;
        for (int i = 0; i < N; ++i)
            disputed += static_cast<std::int32_t>(xi[i]) * x_[i];
        demand = table_.omega_sum[mu] + disputed;
        if (cfg_.excluded_agent >= 0) {
            int i = cfg_.excluded_agent;
            demand -= om[i] + xi[i] * x_[i];
        }
    } else {
        for (int i = 0; i < N; ++i) demand += col[static_cast<std::size_t>(i) * S + best_[i]];
        if (cfg_.excluded_agent >= 0) {
            int i = cfg_.excluded_agent;
            demand -= col[static_cast<std::size_t>(i) * S + best_[i]];
        }
    }

    const double A = demand * inv_sqrt_n_;
    const double arg = A + eta;
    if (!cfg_.price.range().contains(arg)) {
        std::ostringstream os;
        os << "run aborted at step " << (t_ + 1) << ": demand A = " << A
           << ", noise eta = " << eta << ", A + eta = " << arg
           << " is outside the price function's operating range ["
           << cfg_.price.range().lo << ", " << cfg_.price.range().hi << "]";
        throw OutOfRange(os.str());
    }
    const double g = cfg_.price.eval(arg);

    // --- hindsight score update: every strategy pays as if it had played ---
    double* u = scores_.data();
    const std::size_t ns = static_cast<std::size_t>(N) * S;
    for (std::size_t k = 0; k < ns; ++k) u[k] -= col[k] * g;

    // --- refresh decisions ---
    if (S == 2) {
        const std::int8_t* xi = table_.xi.data() + static_cast<std::size_t>(mu) * N;
        const double twog = 2.0 * g;
        for (int i = 0; i < N; ++i) {
            double d = gap_[i] - twog * xi[i];
            gap_[i] = d;
            if (d > 0.0) {
                x_[i] = 1;
                best_[i] = 0;
            } else if (d < 0.0) {
                x_[i] = -1;
                best_[i] = 1;
            } else {
                x_[i] = 1;
                best_[i] = 0;
                ++tie_events_;
            }
        }
    } else {
        for (int i = 0; i < N; ++i) {
            const double* ui = u + static_cast<std::size_t>(i) * S;
            int bst = 0;
            double top = ui[0];
            bool tie = false;
            for (int s = 1; s < S; ++s) {
                if (ui[s] > top) {
                    top = ui[s];
                    bst = s;
                    tie = false;
                } else if (ui[s] == top) {
                    tie = true;  // equal to the current top: lower index wins
                }
            }
            if (tie) ++tie_events_;
            best_[i] = static_cast<std::int16_t>(bst);
        }
    }

    ++t_;
    return {A, g};
}

TimeSeries Engine::run(StepObserver* obs) {
    const int N = cfg_.N, P = cfg_.P, S = cfg_.S;
    const long long T = cfg_.T;
    const long long warmup = cfg_.effective_warmup();

    TimeSeries ts;
    ts.N = N;
    ts.P = P;
    ts.S = S;
    ts.b = cfg_.b;
    ts.T = T;
    ts.warmup = warmup;
    ts.seed = cfg_.seed;
    ts.noise_variance = cfg_.noise.variance();
    ts.price_desc = cfg_.price.describe();
    ts.noise_desc = cfg_.noise.describe();
    ts.record_series = cfg_.record_series;
    ts.batch_len = 10LL * P;
    if (cfg_.record_series) {
        ts.A.reserve(T);
        ts.g.reserve(T);
        ts.eta.reserve(T);
        ts.mu.reserve(T);
    }
    ts.mu_count.assign(P, 0);
    ts.mu_sum_A.assign(P, 0.0);
    ts.mu_sum_A2.assign(P, 0.0);
    ts.mu_sum_g.assign(P, 0.0);
    const long long post_total = T - warmup;
    ts.part_lo = (post_total * 2) / 5;
    ts.part_hi = post_total - ts.part_lo;
    ts.mu_part_count.assign(2 * static_cast<std::size_t>(P), 0);
    ts.mu_part_sum_A.assign(2 * static_cast<std::size_t>(P), 0.0);
    if (S == 2) ts.x_total.assign(N, 0);

    auto mu_gen = make_stream(cfg_.seed, Stream::information);
    auto eta_gen = make_stream(cfg_.seed, Stream::noise);
    std::uniform_int_distribution<std::int32_t> pick(0, P - 1);

    // batch accumulators (post-warmup, length 10*P each)
    double by = 0.0, by2 = 0.0, bg = 0.0;
    long long in_batch = 0;
    std::vector<std::int32_t> bx;
    if (S == 2) bx.assign(N, 0);

    for (long long t = 1; t <= T; ++t) {
        std::int32_t m = pick(mu_gen);
        double eta = cfg_.noise.sample(eta_gen);
        StepResult r = step(m, eta);

        if (cfg_.record_series) {
            ts.A.push_back(r.A);
            ts.g.push_back(r.g);
            ts.eta.push_back(eta);
            ts.mu.push_back(m);
        }

        if (t > warmup) {
            const double y = r.A + eta;
            ++ts.post_steps;
            ts.sum_y += y;
            ts.sum_y2 += y * y;
            ts.sum_g += r.g;
            ts.sum_g2 += r.g * r.g;
            ++ts.mu_count[m];
            ts.mu_sum_A[m] += r.A;
            ts.mu_sum_A2[m] += r.A * r.A;
            ts.mu_sum_g[m] += r.g;
            if (ts.post_steps <= ts.part_lo) {
                ++ts.mu_part_count[m];
                ts.mu_part_sum_A[m] += r.A;
            } else if (ts.post_steps > ts.part_hi) {
                ++ts.mu_part_count[P + m];
                ts.mu_part_sum_A[P + m] += r.A;
            }

            by += y;
            by2 += y * y;
            bg += r.g;
            ++in_batch;
            if (S == 2) {
                const std::int8_t* xs = x_.data();
                for (int i = 0; i < N; ++i) {
                    ts.x_total[i] += xs[i];
                    bx[i] += xs[i];
                }
            }
            if (in_batch == ts.batch_len) {
                ts.batch_y_sum.push_back(by);
                ts.batch_y2_sum.push_back(by2);
                ts.batch_g_sum.push_back(bg);
                if (S == 2) ts.x_batch.insert(ts.x_batch.end(), bx.begin(), bx.end());
                by = by2 = bg = 0.0;
                in_batch = 0;
                if (S == 2) std::fill(bx.begin(), bx.end(), 0);
            }
        }

        if (obs) {
            EngineView v;
            v.t = t;
            v.mu = m;
            v.eta = eta;
            v.A = r.A;
            v.g = r.g;
            v.N = N;
            v.S = S;
            v.x = S == 2 ? x_.data() : nullptr;
            v.score_gap = S == 2 ? gap_.data() : nullptr;
            v.scores = scores_.data();
            v.omega_col =
                S == 2 ? table_.omega.data() + static_cast<std::size_t>(m) * N : nullptr;
            v.xi_col =
                S == 2 ? table_.xi.data() + static_cast<std::size_t>(m) * N : nullptr;
            obs->on_step(v);
        }
    }
    ts.tie_events = tie_events_;
    return ts;
}

GameState Engine::state() const {
    GameState st;
    st.t = t_;
    st.scores = scores_;
    st.score_gap = gap_;
    st.x = x_;
    st.best = best_;
    return st;
}

TimeSeries run(const GameConfig& cfg, StepObserver* obs) {
    Engine e(cfg);
    return e.run(obs);
}

std::pair<TimeSeries, TimeSeries> cavity_experiment(const GameConfig& cfg, int agent) {
    if (agent < 0 || agent >= cfg.N)
        throw Error("cavity experiment: agent index out of range");
    GameConfig full = cfg;
    full.excluded_agent = -1;
    GameConfig without = cfg;
    without.excluded_agent = agent;
    // Same seed -> identical strategies, initial scores, information stream
    // and noise stream; the runs differ only through the demand feedback.
    TimeSeries a = run(full);
    TimeSeries b = run(without);
    return {std::move(a), std::move(b)};
}

}  // namespace mg
