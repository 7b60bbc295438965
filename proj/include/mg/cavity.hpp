#pragma once

#include <utility>
#include <vector>

#include "mg/noise.hpp"
#include "mg/price.hpp"
#include "mg/quadrature.hpp"

namespace mg {

/**
 * Combined single-step fluctuation felt by one effective agent or one
 * effective information state: the exogenous noise convolved with the
 * decision noise of the other agents (a Gaussian of variance (1-q_x)/2).
 * Gaussian parts merge into one width; discrete noise keeps its atoms.
 */
struct EffectiveNoise {
    double sd = 0.0;  // merged gaussian width
    std::vector<std::pair<double, double>> atoms;  // (value, prob) or empty
};

EffectiveNoise make_effective_noise(const NoiseModel& noise, double q_x);

/// Expectation of f(center + zeta) over an EffectiveNoise zeta.
template <class F>
double noise_expect(const EffectiveNoise& z, const QuadratureGrid& q,
                    double center, F&& f) {
    if (z.atoms.empty()) return gauss_expect(q, center, z.sd, f);
    double acc = 0.0;
    for (const auto& [value, prob] : z.atoms)
        acc += prob * gauss_expect(q, center + value, z.sd, f);
    return acc;
}

/**
 * Stationary mean decision of an agent feeling integrated field z_x against
 * its own market impact R_x < 0: the clipped linear response
 * xhat = clip(z_x / |R_x|, -1, 1).  Throws DegenerateReaction if R_x >= 0.
 */
double xhat(double z_x, double R_x);

/**
 * Self-consistent mean price response of one information state: the unique
 * root y of  y = < g(z_g + R_g y + zeta) >.  R_g <= 0 makes the fixed-point
 * equation stiffness 1 - R_g <g'> >= 1, so the root is unique.  The
 * expectation runs over an unbounded Gaussian, so g enters through its
 * increasing continuation (eval_extended), never the engine's traded range.
 */
double ghat(double z_g, double R_g, const PriceFunction& g,
            const EffectiveNoise& zeta, const QuadratureGrid& q);

/// d ghat / d z_g evaluated by the implicit-function rule
/// ghat' = D / (1 - R_g D), D = <g'(z_g + R_g ghat + zeta)>.
double ghat_prime(double z_g, double R_g, const PriceFunction& g,
                  const EffectiveNoise& zeta, const QuadratureGrid& q,
                  double* ghat_out = nullptr);

/// Mean demand of an information state: Ahat = z_g + R_g * ghat(z_g).
double Ahat(double z_g, double R_g, const PriceFunction& g,
            const EffectiveNoise& zeta, const QuadratureGrid& q);

/**
 * Market reaction onto one agent:
 *   R_x = -(alpha/2) * < ghat'(z_g) >,  z_g ~ N(b, (1 + q_x)/2),
 * with the effective noise built from q_x.
 */
double reaction_Rx(double R_g, double q_x, double b, double alpha,
                   const PriceFunction& g, const NoiseModel& noise,
                   const QuadratureGrid& q);

/**
 * Agent reaction onto one information state.  The integrated field on an
 * agent is z_x ~ N(0, alpha q_g / 2); with threshold |R_x| the frozen
 * fraction and the reaction follow in closed form:
 *   1 - phi = erf(|R_x| / sqrt(alpha q_g)),   R_g = (1 - phi) / (2 R_x).
 * Returns (R_g, phi).  Throws DegenerateReaction if R_x >= 0 and
 * DegenerateField if q_g = 0.
 */
std::pair<double, double> reaction_Rg(double R_x, double q_g, double alpha);

struct OrderParams {
    double q_x = 0.0, q_g = 0.0, q_A = 0.0;
};

/**
 * One sweep of the order-parameter maps at fixed reactions:
 *   q_x' = E[xhat^2],  q_g' = E[ghat^2],  q_A' = E[(Ahat - b)^2],
 * the first under z_x ~ N(0, alpha q_g / 2) (closed form), the others under
 * z_g ~ N(b, (1 + q_x)/2) by quadrature.
 */
OrderParams update_order_params(double R_x, double R_g, double b, double q_x,
                                double q_g, double alpha, const PriceFunction& g,
                                const NoiseModel& noise, const QuadratureGrid& q);

/**
 * Producer bias balancing the mean response: the b with
 * < ghat(z_g) > = 0 under z_g ~ N(b, (1 + q_x)/2).  If the symmetric guess
 * (the argmin of |g|) already gives an exactly zero mean — the case for any
 * odd g, where the quadrature cancels pairwise — it is returned as is, so
 * symmetric markets get b = 0 exactly.
 */
double solve_bias(double R_g, double q_x, const PriceFunction& g,
                  const NoiseModel& noise, const QuadratureGrid& q);

/// Inner pair solve: the (R_x, R_g) consistent at fixed (q_x, q_g, b).
struct Reactions {
    double R_x = 0.0, R_g = 0.0, phi = 0.0;
};
Reactions solve_reactions(double q_x, double q_g, double b, double alpha,
                          const PriceFunction& g, const NoiseModel& noise,
                          const QuadratureGrid& q, double warm_R_g = -0.1);

struct CavitySolution {
    double alpha = 0.0;
    double q_x = 0.0, q_g = 0.0, q_A = 0.0;
    double R_x = 0.0, R_g = 0.0;
    double b = 0.0, phi = 0.0;
    double sigma2 = 0.0, sigma = 0.0;
    double margin = 0.0;  // alpha - (1 - phi); must stay positive
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

struct SolveOptions {
    double tol = 1e-10;  // max component change at convergence
    int max_outer = 10000;
    double damping = 0.5;       // on the (q_x, q_g) updates
    double rsb_guard = 1e-3;    // refuse when alpha - (1 - phi) < this
    int quad_order = 64;
    const CavitySolution* warm_start = nullptr;  // continuation in sweeps
};

/**
 * Full stationary solve at a given alpha = P/N.  Damped fixed point on
 * (q_x, q_g) with the exact reaction pair and bias re-solved every sweep.
 * Throws ReplicaSymmetryBroken at or below the transition and NotConverged
 * at the iteration cap.
 */
CavitySolution solve_self_consistent(double alpha, const PriceFunction& g,
                                     const NoiseModel& noise,
                                     const SolveOptions& opts = {});

struct AlphaCResult {
    double alpha_c = 0.0;  // transition point: margin -> 0
    double phi_c = 0.0;    // frozen fraction at the transition = 1 - alpha_c
    double boundary = 0.0; // smallest alpha the solver accepted
    std::vector<CavitySolution> probes;  // converged solutions near alpha_c
};

/**
 * Locate the phase transition: bisect the solver's refusal boundary, then
 * extrapolate the smooth margin alpha - (1 - phi) of converged solutions
 * just above it to zero (the guard keeps the boundary itself ~guard/slope
 * above the true transition, so extrapolation is required, not optional).
 */
AlphaCResult find_alpha_c(const PriceFunction& g, const NoiseModel& noise,
                          double lo = 0.05, double hi = 0.8,
                          const SolveOptions& opts = {});

/// Predicted stationary demand law: Gaussian with mean b, variance sigma^2.
struct APrediction {
    double mean = 0.0;
    double variance = 0.0;
};
APrediction predict_A_distribution(const CavitySolution& sol);

}  // namespace mg
