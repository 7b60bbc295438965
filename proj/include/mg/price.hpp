#pragma once

#include <string>
#include <vector>

namespace mg {

/// Closed interval on which a price function is defined.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/**
 * Price response g(x): maps excess demand (per sqrt(N), noise included) to
 * the price move the market makes against it.  The model requires g to be
 * increasing — a positive demand excess moves the price up — so every
 * constructor verifies g' > 0 on a dense grid over the operating range and
 * refuses to build otherwise.
 *
 * Three families:
 *   linear      g(x) = x
 *   polynomial  g(x) = c1 x + c2 x^2 + ... + cK x^K   (no constant term)
 *   tabulated   monotone cubic interpolation of strictly increasing samples
 *
 * Evaluation outside the operating range throws OutOfRange stating the
 * direction and distance of the violation.
 */
class PriceFunction {
  public:
    enum class Kind { linear, polynomial, tabulated };

    static PriceFunction linear(Interval range);
    static PriceFunction polynomial(std::vector<double> coeffs, Interval range);
    static PriceFunction tabulated(std::vector<double> x, std::vector<double> y,
                                   Interval range);

    /// g(x); throws OutOfRange outside the operating range.
    double eval(double x) const;

    /// g'(x); same domain rule as eval.
    double derivative(double x) const;

    /// g(x) continued past the operating range as the increasing price
    /// curve, not the formula: beyond the range the curve extends linearly
    /// with the edge slopes (a line is its own extension), keeping g
    /// increasing and C^1 on the whole axis.  A polynomial formula would
    /// eventually turn around out there and make the stationary fixed-point
    /// equations ill-posed.  Gaussian expectations in the stationary-state
    /// equations integrate over the whole axis, so they use this and never
    /// throw; the market engine, whose range models an actual trading band,
    /// never does.
    double eval_extended(double x) const;

    /// Derivative of the continuation: formula inside, edge slope outside.
    double derivative_extended(double x) const;

    Kind kind() const { return kind_; }
    const Interval& range() const { return range_; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    /// Human-readable description for output metadata.
    std::string describe() const;

  private:
    PriceFunction() = default;
    void check_monotone() const;  // dense-grid g' > 0 check, throws on failure
    void check_in_range(double x) const;
    void cache_edges();  // range-edge value/slope for the linear continuation

    Kind kind_ = Kind::linear;
    Interval range_{};
    std::vector<double> coeffs_;            // polynomial: c1..cK
    std::vector<double> tab_x_, tab_y_, tab_d_;  // tabulated nodes + slopes
    double edge_y_[2] = {0.0, 0.0};  // g at {lo, hi}
    double edge_d_[2] = {1.0, 1.0};  // g' at {lo, hi}
};

}  // namespace mg
