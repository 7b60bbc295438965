#pragma once

#include <cmath>

namespace mg {

/// Standard normal density.
inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF via erfc for accuracy in both tails.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/**
 * Moments of a unit normal Z restricted to the symmetric window |Z| < v.
 *
 *   trunc_prob(v)   = P(|Z| < v)            = erf(v/sqrt(2))
 *   trunc_second(v) = E[Z^2 1{|Z| < v}]     = (2Phi(v)-1) - 2 v phi(v)
 *
 * Used for the closed-form self-overlap of a clipped linear response:
 * if x = clip(Z/v', -1, 1) with threshold v (in units of the field width),
 *   E[x^2] = trunc_second(v)/v^2 + P(|Z| >= v).
 */
inline double trunc_prob(double v) { return std::erf(v / std::sqrt(2.0)); }

inline double trunc_second(double v) {
    return trunc_prob(v) - 2.0 * v * normal_pdf(v);
}

/// E[x^2] for x = clip(Z/v, -1, 1), Z ~ N(0,1).  Smooth at v -> 0 (limit 1):
/// the inside part ~ v^2/3 cancels the 1/v^2, so small v needs the series.
inline double clipped_linear_self_overlap(double v) {
    if (v <= 0.0) return 1.0;
    if (v < 1e-4) {
        // trunc_second(v) = sqrt(2/pi) * (v^3/3 - v^5/10 + ...)
        static const double sqrt_2_over_pi = 0.7978845608028653559;
        double inside = sqrt_2_over_pi * (v / 3.0 - v * v * v / 10.0);
        return inside + (1.0 - trunc_prob(v));
    }
    return trunc_second(v) / (v * v) + (1.0 - trunc_prob(v));
}

}  // namespace mg
