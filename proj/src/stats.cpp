#include "mg/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mg/errors.hpp"
#include "mg/gaussian.hpp"

namespace mg {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw EmptyWindow("mean of an empty sample");
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) throw EmptyWindow("sd needs at least two samples");
    double m = mean(v), ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double excess_kurtosis(const std::vector<double>& v) {
    if (v.size() < 4) throw EmptyWindow("kurtosis needs at least four samples");
    double m = mean(v);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        double d = x - m;
        double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(v.size());
    m4 /= static_cast<double>(v.size());
    return m4 / (m2 * m2) - 3.0;
}

double ks_statistic_normal(std::vector<double> sample, double mu, double sd) {
    if (sample.empty()) throw EmptyWindow("KS statistic of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = normal_cdf((sample[i] - mu) / sd);
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(f - lo), std::abs(f - hi)});
    }
    return d;
}

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw Error("linear fit needs >= 3 matched points");
    const double n = static_cast<double>(x.size());
    double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.slope_se = std::sqrt(ss_res / (n - 2.0) / sxx);
    return f;
}

Histogram histogram(const std::vector<double>& v, int bins, double lo, double hi) {
    if (v.empty()) throw EmptyWindow("histogram of an empty sample");
    if (bins < 1 || !(hi > lo)) throw Error("histogram: bad bin layout");
    Histogram h;
    h.bin_width = (hi - lo) / bins;
    h.center.resize(static_cast<std::size_t>(bins));
    h.density.assign(static_cast<std::size_t>(bins), 0.0);
    for (int k = 0; k < bins; ++k)
        h.center[static_cast<std::size_t>(k)] = lo + (k + 0.5) * h.bin_width;
    double in_range = 0.0;
    for (double x : v) {
        if (x < lo || x >= hi) continue;
        auto k = static_cast<std::size_t>((x - lo) / h.bin_width);
        if (k >= h.density.size()) k = h.density.size() - 1;
        h.density[k] += 1.0;
        in_range += 1.0;
    }
    if (in_range > 0.0)
        for (double& d : h.density) d /= in_range * h.bin_width;
    return h;
}

}  // namespace mg
