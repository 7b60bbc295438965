#pragma once

#include <cmath>
#include <vector>

namespace mg {

/**
 * Gauss-Hermite quadrature grid (physicists' weight e^{-t^2}).
 *
 * Nodes/weights come from the Golub-Welsch eigen decomposition and are then
 * symmetrized exactly: node[n-1-k] is the bitwise negation of node[k] and the
 * weights match, so a Gaussian expectation of a bitwise-odd integrand about
 * mean 0 sums to exactly 0.0.  Downstream symmetry shortcuts (the producer
 * bias of an odd price function is exactly zero) rely on that.
 */
struct QuadratureGrid {
    int order = 0;
    std::vector<double> nodes;    // ascending
    std::vector<double> weights;  // sum = sqrt(pi)

    /// Cached grid of a given order (thread-safe initialization).
    static const QuadratureGrid& hermite(int order);
};

/// E[f(Z)] for Z ~ N(mean, sd^2), paired-node summation (see above).
template <class F>
double gauss_expect(const QuadratureGrid& q, double mean, double sd, F&& f) {
    if (sd == 0.0) return f(mean);
    const double scale = std::sqrt(2.0) * sd;
    const int n = q.order;
    double acc = 0.0;
    for (int k = 0; k < n / 2; ++k) {
        const int j = n - 1 - k;
        acc += q.weights[k] *
               (f(mean + scale * q.nodes[k]) + f(mean + scale * q.nodes[j]));
    }
    if (n % 2) acc += q.weights[n / 2] * f(mean + scale * q.nodes[n / 2]);
    static const double inv_sqrt_pi = 0.5641895835477562869;
    return acc * inv_sqrt_pi;
}

}  // namespace mg
