#include "mg/price.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mg/errors.hpp"

namespace mg {

namespace {

/// Locate the interpolation interval k with x in [t[k], t[k+1]].
std::size_t find_interval(const std::vector<double>& t, double x) {
    // upper_bound-1 gives the left node; clamp ends so x == t.back() works.
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t k = static_cast<std::size_t>(it - t.begin());
    if (k == 0) return 0;
    if (k >= t.size()) return t.size() - 2;
    return k - 1;
}

}  // namespace

PriceFunction PriceFunction::linear(Interval range) {
    PriceFunction g;
    g.kind_ = Kind::linear;
    g.range_ = range;
    g.coeffs_ = {1.0};
    g.check_monotone();
    g.cache_edges();
    return g;
}

PriceFunction PriceFunction::polynomial(std::vector<double> coeffs, Interval range) {
    if (coeffs.empty()) throw Error("price function: empty coefficient vector");
    PriceFunction g;
    g.kind_ = Kind::polynomial;
    g.range_ = range;
    g.coeffs_ = std::move(coeffs);
    g.check_monotone();
    g.cache_edges();
    return g;
}

PriceFunction PriceFunction::tabulated(std::vector<double> x, std::vector<double> y,
                                       Interval range) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("price function: table needs >= 2 equal-length x/y vectors");
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1]))
            throw Error("price function: table x values must be strictly increasing");
        if (!(y[i] > y[i - 1]))
            throw Error("price function: table y values must be strictly increasing");
    }
    if (range.lo < x.front() || range.hi > x.back())
        throw Error("price function: operating range exceeds the tabulated span");

    PriceFunction g;
    g.kind_ = Kind::tabulated;
    g.range_ = range;
    g.tab_x_ = std::move(x);
    g.tab_y_ = std::move(y);

    // Shape-preserving node slopes (Fritsch-Carlson limiter): start from the
    // secant average, then rescale so the cubic never overshoots the data.
    const std::size_t n = g.tab_x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = g.tab_x_[k + 1] - g.tab_x_[k];
        delta[k] = (g.tab_y_[k + 1] - g.tab_y_[k]) / h[k];
    }
    g.tab_d_.assign(n, 0.0);
    g.tab_d_[0] = delta[0];
    g.tab_d_[n - 1] = delta[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k)
        g.tab_d_[k] = 0.5 * (delta[k - 1] + delta[k]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double a = g.tab_d_[k] / delta[k];
        double b = g.tab_d_[k + 1] / delta[k];
        double r = a * a + b * b;
        if (r > 9.0) {
            double tau = 3.0 / std::sqrt(r);
            g.tab_d_[k] = tau * a * delta[k];
            g.tab_d_[k + 1] = tau * b * delta[k];
        }
    }

    g.check_monotone();
    g.cache_edges();
    return g;
}

void PriceFunction::cache_edges() {
    // At the range edges eval_extended still takes the in-range path, so
    // caching through it is circularity-free.
    edge_y_[0] = eval_extended(range_.lo);
    edge_y_[1] = eval_extended(range_.hi);
    edge_d_[0] = derivative_extended(range_.lo);
    edge_d_[1] = derivative_extended(range_.hi);
}

void PriceFunction::check_in_range(double x) const {
    if (x < range_.lo) {
        std::ostringstream os;
        os << "price function evaluated below its operating range: x = " << x
           << " < " << range_.lo << " (short by " << (range_.lo - x) << ")";
        throw OutOfRange(os.str());
    }
    if (x > range_.hi) {
        std::ostringstream os;
        os << "price function evaluated above its operating range: x = " << x
           << " > " << range_.hi << " (over by " << (x - range_.hi) << ")";
        throw OutOfRange(os.str());
    }
}

double PriceFunction::eval(double x) const {
    check_in_range(x);
    return eval_extended(x);
}

double PriceFunction::derivative(double x) const {
    check_in_range(x);
    return derivative_extended(x);
}

double PriceFunction::eval_extended(double x) const {
    if (kind_ == Kind::tabulated) {
        // linear continuation with the end slopes keeps the function
        // increasing and C^1 beyond the table
        if (x < tab_x_.front())
            return tab_y_.front() + tab_d_.front() * (x - tab_x_.front());
        if (x > tab_x_.back())
            return tab_y_.back() + tab_d_.back() * (x - tab_x_.back());
    } else if (kind_ == Kind::polynomial) {
        // Beyond the operating range the polynomial formula eventually stops
        // increasing (an upward parabola turns around at -c1/(2 c2)), which
        // would make the stationary fixed-point equation lose its unique
        // root exactly where wide quadrature nodes land.  The curve, not
        // the formula, is the model, so it continues linearly with the edge
        // slopes — the same treatment a tabulated curve gets.  For an odd
        // polynomial on a symmetric range the continuation stays bitwise
        // odd, preserving the exact b = 0 of symmetric markets.
        if (x < range_.lo) return edge_y_[0] + edge_d_[0] * (x - range_.lo);
        if (x > range_.hi) return edge_y_[1] + edge_d_[1] * (x - range_.hi);
    }
    switch (kind_) {
        case Kind::linear:
            return x;
        case Kind::polynomial: {
            // Horner in the form x*(c1 + x*(c2 + ...)).  With even
            // coefficients exactly zero this evaluates to the exact bitwise
            // negation under x -> -x, which downstream symmetry shortcuts
            // rely on.
            double acc = coeffs_.back();
            for (std::size_t k = coeffs_.size() - 1; k-- > 0;)
                acc = acc * x + coeffs_[k];
            return acc * x;
        }
        case Kind::tabulated: {
            std::size_t k = find_interval(tab_x_, x);
            double h = tab_x_[k + 1] - tab_x_[k];
            double t = (x - tab_x_[k]) / h;
            double t2 = t * t, t3 = t2 * t;
            double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            double h10 = t3 - 2.0 * t2 + t;
            double h01 = -2.0 * t3 + 3.0 * t2;
            double h11 = t3 - t2;
            return h00 * tab_y_[k] + h10 * h * tab_d_[k] + h01 * tab_y_[k + 1] +
                   h11 * h * tab_d_[k + 1];
        }
    }
    return 0.0;  // unreachable
}

double PriceFunction::derivative_extended(double x) const {
    if (kind_ == Kind::tabulated) {
        if (x < tab_x_.front()) return tab_d_.front();
        if (x > tab_x_.back()) return tab_d_.back();
    } else if (kind_ == Kind::polynomial) {
        if (x < range_.lo) return edge_d_[0];
        if (x > range_.hi) return edge_d_[1];
    }
    switch (kind_) {
        case Kind::linear:
            return 1.0;
        case Kind::polynomial: {
            // d/dx sum c_k x^k = sum k c_k x^{k-1}, Horner again.
            double acc = coeffs_.back() * static_cast<double>(coeffs_.size());
            for (std::size_t k = coeffs_.size() - 1; k-- > 0;)
                acc = acc * x + coeffs_[k] * static_cast<double>(k + 1);
            return acc;
        }
        case Kind::tabulated: {
            std::size_t k = find_interval(tab_x_, x);
            double h = tab_x_[k + 1] - tab_x_[k];
            double t = (x - tab_x_[k]) / h;
            double t2 = t * t;
            double d00 = (6.0 * t2 - 6.0 * t) / h;
            double d10 = 3.0 * t2 - 4.0 * t + 1.0;
            double d01 = (-6.0 * t2 + 6.0 * t) / h;
            double d11 = 3.0 * t2 - 2.0 * t;
            return d00 * tab_y_[k] + d10 * tab_d_[k] + d01 * tab_y_[k + 1] +
                   d11 * tab_d_[k + 1];
        }
    }
    return 0.0;  // unreachable
}

void PriceFunction::check_monotone() const {
    if (!(range_.hi > range_.lo))
        throw Error("price function: operating range must have positive width");
    const int grid = 10000;
    for (int i = 0; i <= grid; ++i) {
        double x = range_.lo + (range_.hi - range_.lo) * i / grid;
        if (!(derivative(x) > 0.0)) {
            std::ostringstream os;
            os << "price function: derivative not positive at x = " << x
               << " (g' = " << derivative(x) << "); the model requires an "
               << "increasing price response on the whole operating range";
            throw Error(os.str());
        }
    }
}

std::string PriceFunction::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::linear:
            os << "linear";
            break;
        case Kind::polynomial: {
            os << "polynomial[";
            for (std::size_t k = 0; k < coeffs_.size(); ++k)
                os << (k ? "," : "") << coeffs_[k];
            os << "]";
            break;
        }
        case Kind::tabulated:
            os << "tabulated[" << tab_x_.size() << " nodes]";
            break;
    }
    os << " on [" << range_.lo << "," << range_.hi << "]";
    return os.str();
}

}  // namespace mg
