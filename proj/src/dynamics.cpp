#include "mg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mg/errors.hpp"
#include "mg/measures.hpp"

namespace mg {

namespace {

/// Throws unless `ids` is a non-empty set of distinct agent indices in [0, N).
void check_ids(const std::vector<int>& ids, int N) {
    if (ids.empty()) throw ConfigError("trajectory recording: empty tracked-agent set");
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] < 0 || sorted[k] >= N) {
            std::ostringstream os;
            os << "trajectory recording: agent id " << sorted[k]
               << " out of range (N = " << N << ")";
            throw ConfigError(os.str());
        }
        if (k > 0 && sorted[k] == sorted[k - 1]) {
            std::ostringstream os;
            os << "trajectory recording: duplicate agent id " << sorted[k];
            throw ConfigError(os.str());
        }
    }
}

/// Observer that fills a TrajectoryRecord.  Samples are taken after the
/// step's score update, matching the sign the TimeSeries accumulates.
class TrackObserver final : public StepObserver {
  public:
    TrackObserver(TrajectoryRecord& rec, const std::vector<int>& ids)
        : rec_(rec),
          ids_(ids),
          prev_(ids.size(), 0),
          cum_(ids.size(), 0),
          flip_(ids.size(), 0),
          sqrt_p_(std::sqrt(static_cast<double>(rec.P))) {}

    void on_step(const EngineView& v) override {
        const std::size_t K = ids_.size();
        const std::int8_t* x = v.x;
        for (std::size_t k = 0; k < K; ++k) {
            const std::int8_t s = x[ids_[k]];
            cum_[k] += s;
            if (!first_ && s != prev_[k]) ++flip_[k];
            prev_[k] = s;
        }
        first_ = false;

        if (v.t % rec_.sign_stride == 0) {
            for (std::size_t k = 0; k < K; ++k) rec_.signs.push_back(x[ids_[k]]);
            ++rec_.sign_samples;
        }

        if (next_ < rec_.times.size() && v.t == rec_.times[next_]) {
            const std::size_t m = rec_.times.size();
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t at = k * m + next_;
                const double u = v.score_gap[ids_[k]];
                rec_.U[at] = u;
                // u_tau = U / sqrt(P): the same expression a consumer would
                // use to recompute it, so the check is bit-exact.
                rec_.u_tau[at] = u / sqrt_p_;
                rec_.x_cum[at] = cum_[k];
                rec_.x_running[at] = static_cast<double>(cum_[k]) / static_cast<double>(v.t);
                rec_.flips[at] = flip_[k];
            }
            ++next_;
        }
    }

  private:
    TrajectoryRecord& rec_;
    const std::vector<int>& ids_;
    std::vector<std::int8_t> prev_;
    std::vector<std::int64_t> cum_;
    std::vector<std::int32_t> flip_;
    std::size_t next_ = 0;
    bool first_ = true;
    double sqrt_p_;  // u_tau = U / sqrt(P)
};

}  // namespace

std::size_t TrajectoryRecord::sample_at(long long t) const {
    return static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

std::vector<long long> standard_schedule(long long T, int P) {
    if (T < 1) throw ConfigError("recording schedule: T must be >= 1");
    if (P < 1) throw ConfigError("recording schedule: P must be >= 1");
    std::vector<long long> s;
    const long long dense = std::min<long long>(T, 1000);
    s.reserve(static_cast<std::size_t>(dense) + 512);
    for (long long t = 1; t <= dense; ++t) s.push_back(t);
    // 100 points per decade past the dense prefix.
    const double step = std::pow(10.0, 0.01);
    double x = static_cast<double>(dense);
    while (true) {
        x *= step;
        const long long t = std::llround(x);
        if (t >= T) break;
        if (t > s.back()) s.push_back(t);
    }
    // Landmarks the analysis windows pin to, sampled exactly.
    const long long marks[] = {P, 10LL * P, 50LL * P, T / 2, T};
    for (long long m : marks)
        if (m >= 1 && m <= T) s.push_back(m);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

TrajectoryRecord record_trajectories(const GameConfig& cfg,
                                     const std::vector<int>& ids,
                                     const std::vector<long long>& schedule) {
    if (cfg.S != 2) {
        std::ostringstream os;
        os << "trajectory recording tracks the two-strategy score difference; "
           << "got S = " << cfg.S;
        throw WrongS(os.str());
    }
    cfg.validate();
    check_ids(ids, cfg.N);
    if (schedule.empty()) throw ConfigError("trajectory recording: empty schedule");

    TrajectoryRecord rec;
    rec.N = cfg.N;
    rec.P = cfg.P;
    rec.S = cfg.S;
    rec.T = cfg.T;
    rec.seed = cfg.seed;
    rec.agent_ids = ids;
    rec.times.reserve(schedule.size());
    for (long long t : schedule)
        if (t >= 1 && t <= cfg.T) rec.times.push_back(t);
    std::sort(rec.times.begin(), rec.times.end());
    rec.times.erase(std::unique(rec.times.begin(), rec.times.end()), rec.times.end());
    if (rec.times.empty())
        throw ConfigError("trajectory recording: no schedule point falls in [1, T]");

    const std::size_t cells = ids.size() * rec.times.size();
    rec.U.assign(cells, 0.0);
    rec.u_tau.assign(cells, 0.0);
    rec.x_running.assign(cells, 0.0);
    rec.x_cum.assign(cells, 0);
    rec.flips.assign(cells, 0);
    rec.sign_stride = std::max<long long>(1, cfg.P / 4);
    rec.signs.reserve(static_cast<std::size_t>(cfg.T / rec.sign_stride + 1) * ids.size());

    GameConfig local = cfg;
    local.record_series = false;  // the observer collects everything needed

    TrackObserver obs(rec, ids);
    Engine engine(local);
    engine.run(&obs);
    return rec;
}

FrozenSplit classify_frozen(const TrajectoryRecord& rec, long long t_lo) {
    const std::size_t K = rec.agent_ids.size();
    const std::size_t M = rec.times.size();
    if (M == 0) throw EmptyWindow("frozen classification: record has no samples");
    const std::size_t base = rec.sample_at(t_lo);
    if (base + 1 >= M)
        throw EmptyWindow("frozen classification: window start is at or past the last sample");
    const std::size_t last = M - 1;
    const long long span = rec.times[last] - rec.times[base];

    FrozenSplit out;
    out.frozen.resize(K);
    out.xbar.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::int64_t sum =
            rec.x_cum[k * M + last] - rec.x_cum[k * M + base];
        const double xb = static_cast<double>(sum) / static_cast<double>(span);
        out.xbar[k] = xb;
        out.frozen[k] = std::abs(xb) >= 1.0 - kFrozenEps;
        if (out.frozen[k]) ++out.frozen_count;
    }
    return out;
}

RandomWalkResult random_walk_test(const std::vector<TrajectoryRecord>& ens,
                                  long long t_lo, long long t_hi,
                                  const std::vector<std::vector<int>>* subset,
                                  long long min_pairs, int min_points) {
    if (ens.empty()) throw InsufficientEnsemble("random-walk fit: empty ensemble");
    if (subset && subset->size() != ens.size())
        throw ConfigError("random-walk fit: one subset per record required");

    // Sample times every record shares inside the window.
    std::vector<long long> ts;
    for (long long t : ens[0].times) {
        if (t < t_lo || t > t_hi) continue;
        bool everywhere = true;
        for (std::size_t r = 1; r < ens.size() && everywhere; ++r)
            everywhere = std::binary_search(ens[r].times.begin(), ens[r].times.end(), t);
        if (everywhere) ts.push_back(t);
    }

    long long pairs = 0;
    for (std::size_t r = 0; r < ens.size(); ++r)
        pairs += static_cast<long long>(
            subset ? (*subset)[r].size() : ens[r].agent_ids.size());

    std::ostringstream os;
    if (pairs < min_pairs) {
        os << "random-walk fit: " << pairs << " (record, agent) pairs available, need "
           << min_pairs;
        throw InsufficientEnsemble(os.str());
    }
    if (static_cast<long long>(ts.size()) < min_points) {
        os << "random-walk fit: " << ts.size() << " shared sample times in [" << t_lo
           << ", " << t_hi << "], need " << min_points;
        throw InsufficientEnsemble(os.str());
    }

    std::vector<double> lx, ly;
    lx.reserve(ts.size());
    ly.reserve(ts.size());
    for (long long t : ts) {
        double sum_sq = 0.0;
        for (std::size_t r = 0; r < ens.size(); ++r) {
            const TrajectoryRecord& rec = ens[r];
            const std::size_t at = rec.sample_at(t);  // exact hit by construction
            const std::size_t M = rec.times.size();
            if (subset) {
                for (int k : (*subset)[r]) {
                    const double u = rec.U[static_cast<std::size_t>(k) * M + at];
                    sum_sq += u * u;
                }
            } else {
                for (std::size_t k = 0; k < rec.agent_ids.size(); ++k) {
                    const double u = rec.U[k * M + at];
                    sum_sq += u * u;
                }
            }
        }
        const double rms = std::sqrt(sum_sq / static_cast<double>(pairs));
        if (!(rms > 0.0)) continue;  // all-zero ensemble at this time
        lx.push_back(std::log10(static_cast<double>(t)));
        ly.push_back(std::log10(rms));
    }
    if (static_cast<long long>(lx.size()) < min_points) {
        os << "random-walk fit: only " << lx.size()
           << " usable (non-degenerate) sample times, need " << min_points;
        throw InsufficientEnsemble(os.str());
    }

    const FitResult fit = linear_fit(lx, ly);
    RandomWalkResult out;
    out.slope = fit.slope;
    out.slope_se = fit.slope_se;
    out.intercept = fit.intercept;
    out.points = static_cast<int>(lx.size());
    out.pairs = pairs;
    return out;
}

ExcursionResult excursion_test(const std::vector<TrajectoryRecord>& ens,
                               long long t_lo, long long t_hi) {
    if (ens.empty()) throw InsufficientEnsemble("excursion test: empty ensemble");
    ExcursionResult out;
    double alternation_sum = 0.0;

    for (const TrajectoryRecord& rec : ens) {
        const std::size_t M = rec.times.size();
        const long long tenP = 10LL * rec.P;
        const FrozenSplit split = classify_frozen(rec, tenP);

        const std::size_t lo = rec.sample_at(t_lo);
        std::size_t hi = rec.sample_at(t_hi);
        if (hi == M || rec.times[hi] > t_hi) {
            if (hi == 0) throw EmptyWindow("excursion test: window ends before the first sample");
            --hi;  // last sample inside the window
        }
        if (lo >= hi) throw EmptyWindow("excursion test: fewer than two samples in the window");
        const std::size_t mark = rec.sample_at(tenP);
        if (mark >= M) throw EmptyWindow("excursion test: no sample at or past 10*P");

        const double window_in_10P =
            static_cast<double>(rec.times[hi] - rec.times[lo]) / static_cast<double>(tenP);

        for (std::size_t k = 0; k < rec.agent_ids.size(); ++k) {
            if (split.frozen[k]) {
                ++out.frozen;
                out.frozen_flips_after_10P +=
                    rec.flips[k * M + (M - 1)] - rec.flips[k * M + mark];
                continue;
            }
            ++out.non_frozen;
            long long inside = 0, total = 0;
            for (std::size_t s = lo; s <= hi; ++s) {
                ++total;
                const double u = rec.U[k * M + s];
                if (std::abs(u) < std::sqrt(static_cast<double>(rec.times[s]))) ++inside;
            }
            out.fraction_inside.push_back(static_cast<double>(inside) /
                                          static_cast<double>(total));
            const double flips_in_window =
                static_cast<double>(rec.flips[k * M + hi] - rec.flips[k * M + lo]);
            alternation_sum += flips_in_window / window_in_10P;
        }
    }

    if (out.non_frozen > 0) {
        std::vector<double> f = out.fraction_inside;
        const std::size_t mid = f.size() / 2;
        std::nth_element(f.begin(), f.begin() + mid, f.end());
        double med = f[mid];
        if (f.size() % 2 == 0) {
            // lower-half maximum completes the even-count median
            const double below = *std::max_element(f.begin(), f.begin() + mid);
            med = 0.5 * (med + below);
        }
        out.median_fraction = med;
        out.mean_alternations_per_10P = alternation_sum / static_cast<double>(out.non_frozen);
    }
    return out;
}

BinaryNoiseResult binary_noise_test(const std::vector<TrajectoryRecord>& ens,
                                    long long t_lo) {
    if (ens.empty()) throw InsufficientEnsemble("binary-noise test: empty ensemble");
    BinaryNoiseResult out;
    long long autocorr_ok = 0;

    for (const TrajectoryRecord& rec : ens) {
        const std::size_t K = rec.agent_ids.size();
        const long long stride = rec.sign_stride;
        if (rec.sign_samples == 0) throw EmptyWindow("binary-noise test: no sign samples");

        // sign sample s (0-based) was taken at step (s + 1) * stride
        long long s0 = t_lo / stride;
        while (s0 < rec.sign_samples && (s0 + 1) * stride <= t_lo) ++s0;
        const long long n = rec.sign_samples - s0;
        if (n < 16) throw EmptyWindow("binary-noise test: fewer than 16 sign samples after t_lo");

        const long long lag = std::max<long long>(1, (10LL * rec.P) / stride);
        if (n - lag < 16) {
            std::ostringstream os;
            os << "binary-noise test: " << n << " sign samples but lag 10*P spans " << lag
               << "; window too short for the autocorrelation";
            throw InsufficientEnsemble(os.str());
        }

        const FrozenSplit split = classify_frozen(rec, t_lo);

        for (std::size_t k = 0; k < K; ++k) {
            std::int64_t sum = 0;
            for (long long s = s0; s < rec.sign_samples; ++s)
                sum += rec.signs[static_cast<std::size_t>(s) * K + k];
            const double xb = static_cast<double>(sum) / static_cast<double>(n);
            out.xbar.push_back(xb);

            // Two-pass variance against the closed form 1 - xbar^2; for +-1
            // values they agree to rounding error.
            double ss = 0.0;
            for (long long s = s0; s < rec.sign_samples; ++s) {
                const double d = rec.signs[static_cast<std::size_t>(s) * K + k] - xb;
                ss += d * d;
            }
            const double var_direct = ss / static_cast<double>(n);
            out.max_variance_identity_gap = std::max(
                out.max_variance_identity_gap, std::abs(var_direct - (1.0 - xb * xb)));

            if (split.frozen[k]) continue;
            const double denom = 1.0 - xb * xb;
            if (denom < 1e-12) continue;  // effectively frozen in this window
            ++out.non_frozen;
            std::int64_t lag_sum = 0;
            for (long long s = s0; s < rec.sign_samples - lag; ++s)
                lag_sum += rec.signs[static_cast<std::size_t>(s) * K + k] *
                           rec.signs[static_cast<std::size_t>(s + lag) * K + k];
            const double m_lag =
                static_cast<double>(lag_sum) / static_cast<double>(n - lag);
            const double rho = (m_lag - xb * xb) / denom;
            out.autocorr_10P.push_back(rho);
            if (std::abs(rho) < 0.1) ++autocorr_ok;
        }
    }

    if (out.non_frozen > 0)
        out.frac_autocorr_below =
            static_cast<double>(autocorr_ok) / static_cast<double>(out.non_frozen);
    return out;
}

GramAccumulator::GramAccumulator(int K, int batch_samples)
    : K_(K), nb_(batch_samples) {
    if (K < 2) throw ConfigError("pairwise covariance: need at least 2 tracked agents");
    if (batch_samples < 2) throw ConfigError("pairwise covariance: batch must hold >= 2 samples");
    const std::size_t pairs = static_cast<std::size_t>(K) * (K - 1) / 2;
    gram_.assign(pairs, 0);
    sum_g_.assign(pairs, 0.0);
    sum_g2_.assign(pairs, 0.0);
    agent_sum_.assign(K, 0);
    agent_sum_batched_.assign(K, 0);
}

void GramAccumulator::add(const std::int8_t* row) {
    std::size_t p = 0;
    for (int i = 1; i < K_; ++i) {
        const std::int32_t xi = row[i];
        for (int j = 0; j < i; ++j) gram_[p++] += xi * row[j];
    }
    for (int i = 0; i < K_; ++i) agent_sum_[i] += row[i];
    ++samples_;
    if (++in_batch_ == nb_) {
        for (std::size_t q = 0; q < gram_.size(); ++q) {
            sum_g_[q] += gram_[q];
            sum_g2_[q] += static_cast<double>(gram_[q]) * gram_[q];
            gram_[q] = 0;
        }
        agent_sum_batched_ = agent_sum_;
        ++batches_;
        in_batch_ = 0;
    }
}

GramAccumulator::Pairwise GramAccumulator::finish() const {
    if (batches_ < 2)
        throw InsufficientEnsemble(
            "pairwise covariance: need at least 2 complete batches of sign samples");
    const double B = static_cast<double>(batches_);
    const double nb = static_cast<double>(nb_);
    const double n = B * nb;  // samples in complete batches

    std::vector<double> xbar(K_);
    Pairwise out;
    out.pairs = K_ * (K_ - 1) / 2;
    out.samples = batches_ * nb_;
    out.batches = batches_;
    for (int i = 0; i < K_; ++i) {
        xbar[i] = static_cast<double>(agent_sum_batched_[i]) / n;
        // Self-covariance of a +-1 series is 1 - xbar^2 exactly; the direct
        // expression below differs only by rounding.
        const double s = static_cast<double>(agent_sum_batched_[i]);
        const double var_direct = (n - s * s / n) / n;
        out.max_self_identity_gap = std::max(
            out.max_self_identity_gap, std::abs(var_direct - (1.0 - xbar[i] * xbar[i])));
    }

    double raw = 0.0, debiased = 0.0, noise = 0.0;
    std::size_t p = 0;
    for (int i = 1; i < K_; ++i) {
        for (int j = 0; j < i; ++j, ++p) {
            const double mean_g = sum_g_[p] / B;  // mean per-batch product sum
            const double cov = mean_g / nb - xbar[i] * xbar[j];
            // variance of the batch-mean estimate of cov
            const double var_b = (sum_g2_[p] / B - mean_g * mean_g) * B / (B - 1.0);
            const double s2 = var_b / (nb * nb) / B;
            raw += std::abs(cov);
            debiased += std::sqrt(std::max(cov * cov - s2, 0.0));
            noise += std::sqrt(std::max(s2, 0.0));
        }
    }
    const double np = static_cast<double>(out.pairs);
    out.mean_abs_cov_raw = raw / np;
    out.mean_abs_cov = debiased / np;
    out.mean_noise_sd = noise / np;
    return out;
}

namespace {

/// Streams a strided post-warmup sign matrix of the first K agents into a
/// GramAccumulator.
class GramObserver final : public StepObserver {
  public:
    GramObserver(GramAccumulator& acc, int K, long long warmup, long long stride)
        : acc_(acc), row_(K), warmup_(warmup), stride_(stride) {}

    void on_step(const EngineView& v) override {
        if (v.t <= warmup_) return;
        if ((v.t - warmup_) % stride_ != 0) return;
        for (std::size_t k = 0; k < row_.size(); ++k) row_[k] = v.x[k];
        acc_.add(row_.data());
    }

  private:
    GramAccumulator& acc_;
    std::vector<std::int8_t> row_;
    long long warmup_, stride_;
};

DecorrelationSide run_side(const GameConfig& cfg, int tracked) {
    const long long stride = std::max<long long>(1, cfg.P / 4);
    // Batches span 10*P steps, past the decision mixing time, so batch means
    // are nearly independent and their spread prices each pair's noise.
    const int batch_samples = static_cast<int>(std::max<long long>(2, (10LL * cfg.P) / stride));
    GramAccumulator acc(tracked, batch_samples);
    GramObserver obs(acc, tracked, cfg.effective_warmup(), stride);

    GameConfig local = cfg;
    local.record_series = false;
    Engine engine(local);
    engine.run(&obs);

    const GramAccumulator::Pairwise pw = acc.finish();
    DecorrelationSide side;
    side.N = cfg.N;
    side.P = cfg.P;
    side.window = cfg.T - cfg.effective_warmup();
    side.pairs = pw.pairs;
    side.mean_abs_cov_raw = pw.mean_abs_cov_raw;
    side.mean_abs_cov = pw.mean_abs_cov;
    side.mean_noise_sd = pw.mean_noise_sd;
    return side;
}

}  // namespace

DecorrelationResult cross_agent_decorrelation(const GameConfig& small_cfg,
                                              const GameConfig& large_cfg,
                                              int tracked) {
    std::ostringstream os;
    if (small_cfg.S != 2 || large_cfg.S != 2)
        throw WrongS("cross-agent decorrelation: sign decisions require S = 2");
    if (large_cfg.P != 4 * small_cfg.P) {
        os << "cross-agent decorrelation compares P against 4P; got P = " << small_cfg.P
           << " and " << large_cfg.P;
        throw ConfigError(os.str());
    }
    if (std::abs(small_cfg.alpha() - large_cfg.alpha()) > 1e-12) {
        os << "cross-agent decorrelation needs matched alpha; got " << small_cfg.alpha()
           << " and " << large_cfg.alpha();
        throw ConfigError(os.str());
    }
    if (tracked > small_cfg.N || tracked > large_cfg.N) {
        os << "cross-agent decorrelation: " << tracked
           << " tracked agents exceed the smaller run (N = "
           << std::min(small_cfg.N, large_cfg.N) << ")";
        throw ConfigError(os.str());
    }
    small_cfg.validate();
    large_cfg.validate();

    DecorrelationResult out;
    out.small = run_side(small_cfg, tracked);
    out.large = run_side(large_cfg, tracked);
    out.ratio = out.large.mean_abs_cov > 0.0
                    ? out.small.mean_abs_cov / out.large.mean_abs_cov
                    : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace mg
