#include "mg/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "mg/errors.hpp"
#include "mg/gaussian.hpp"

namespace mg {

namespace {

void require_negative_reaction(double R_x) {
    if (!(R_x < 0.0)) {
        std::ostringstream os;
        os << "reaction R_x = " << R_x
           << " must be negative (an agent's own impact always opposes it)";
        throw DegenerateReaction(os.str());
    }
}

/// x with the smallest |g(x)| on the operating range: the natural center for
/// bias searches and the solver's initial b.  g is increasing, so this is
/// the root of g when the range brackets one (bisection keeps an exactly
/// symmetric range's midpoint at 0.0), else the nearer endpoint.
double argmin_abs_g(const PriceFunction& g) {
    double lo = g.range().lo, hi = g.range().hi;
    double glo = g.eval(lo), ghi = g.eval(hi);
    if (glo >= 0.0) return lo;
    if (ghi <= 0.0) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi));
         ++it) {
        double mid = 0.5 * (lo + hi);
        double v = g.eval(mid);
        if (v == 0.0) return mid;
        if (v < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(g.eval(lo)) <= std::abs(g.eval(hi)) ? lo : hi;
}

/**
 * Safeguarded Newton for the ghat fixed point F(y) = y - <g(z + R_g y + .)>.
 * F' = 1 + |R_g| <g'> >= 1 gives a one-sided bracket for free: from any y,
 * the root lies within |F(y)| of y, so the bracket shrinks on both sides
 * every iteration and Newton can never escape.
 *
 * noinline: the bias solve gets b = 0 exactly for symmetric markets because
 * mirrored quadrature nodes produce bitwise-negated roots that cancel in the
 * paired summation.  FMA contraction at the summation site (the compiler
 * fusing an inlined integrand's last multiply into the pair add) would break
 * that cancellation, so the root must stay behind an opaque call.
 */
__attribute__((noinline))
double solve_ghat(double z, double Rg, const PriceFunction& g,
                  const EffectiveNoise& zeta, const QuadratureGrid& q,
                  const double* seed) {
    // Expectations here run over unbounded Gaussians, so they use the
    // increasing continuation of the price curve, not the engine's traded range.
    auto mean_g = [&](double y) {
        double c = z + Rg * y;
        return noise_expect(zeta, q, c, [&](double u) { return g.eval_extended(u); });
    };
    auto mean_gp = [&](double y) {
        double c = z + Rg * y;
        return noise_expect(zeta, q, c,
                            [&](double u) { return g.derivative_extended(u); });
    };

    double y = seed ? *seed : mean_g(0.0);
    double F = y - mean_g(y);
    if (F == 0.0) return y;
    double lo, hi;
    if (F > 0.0) {
        hi = y;
        lo = y - F;
    } else {
        lo = y;
        hi = y - F;
    }
    for (int it = 0; it < 200; ++it) {
        double Fp = 1.0 - Rg * mean_gp(y);
        double yn = y - F / Fp;
        if (!(yn > lo && yn < hi)) yn = 0.5 * (lo + hi);
        double Fn = yn - mean_g(yn);
        if (Fn == 0.0 || std::abs(yn - y) <= 1e-15 * (1.0 + std::abs(yn)))
            return yn;
        if (Fn > 0.0) {
            hi = yn;
            lo = std::max(lo, yn - Fn);
        } else {
            lo = yn;
            hi = std::min(hi, yn - Fn);
        }
        y = yn;
        F = Fn;
    }
    return y;  // bracket is by now a few ulps wide; y is the root
}

/// Simple Brent root finder on a bracket [a, b] with fa*fb <= 0.
template <class F>
double brent(F&& f, double a, double b, double fa, double fb, double xtol,
             int max_iter, const char* what) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) {
        std::ostringstream os;
        os << what << ": bracket endpoints do not straddle a root";
        throw NoBracket(os.str());
    }
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        double tol = 2.0 * 2.220446049250313e-16 * std::abs(b) + 0.5 * xtol;
        double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = m;
            e = m;
        } else {
            double s = fb / fa, p, qq;
            if (a == c) {
                p = 2.0 * m * s;
                qq = 1.0 - s;
            } else {
                double r = fb / fc, t = fa / fc;
                p = s * (2.0 * m * t * (t - r) - (b - a) * (r - 1.0));
                qq = (t - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0)
                qq = -qq;
            else
                p = -p;
            if (2.0 * p < std::min(3.0 * m * qq - std::abs(tol * qq), std::abs(e * qq))) {
                e = d;
                d = p / qq;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if (fb == 0.0) return b;
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    std::ostringstream os;
    os << what << ": root not located in " << max_iter << " iterations";
    throw NotConverged(os.str());
}

}  // namespace

EffectiveNoise make_effective_noise(const NoiseModel& noise, double q_x) {
    // The other agents' decision fluctuations act as an extra Gaussian of
    // variance (1 - q_x)/2 on top of the exogenous noise.
    double delta_var = 0.5 * (1.0 - q_x);
    if (delta_var < 0.0) delta_var = 0.0;
    EffectiveNoise z;
    switch (noise.kind()) {
        case NoiseModel::Kind::none:
            z.sd = std::sqrt(delta_var);
            break;
        case NoiseModel::Kind::gaussian:
            z.sd = std::sqrt(delta_var + noise.variance());
            break;
        case NoiseModel::Kind::discrete:
            z.sd = std::sqrt(delta_var);
            z.atoms = noise.atoms();
            break;
    }
    return z;
}

double xhat(double z_x, double R_x) {
    require_negative_reaction(R_x);
    double v = z_x / (-R_x);
    return std::clamp(v, -1.0, 1.0);
}

double ghat(double z_g, double R_g, const PriceFunction& g,
            const EffectiveNoise& zeta, const QuadratureGrid& q) {
    return solve_ghat(z_g, R_g, g, zeta, q, nullptr);
}

double ghat_prime(double z_g, double R_g, const PriceFunction& g,
                  const EffectiveNoise& zeta, const QuadratureGrid& q,
                  double* ghat_out) {
    double y = solve_ghat(z_g, R_g, g, zeta, q, nullptr);
    if (ghat_out) *ghat_out = y;
    double c = z_g + R_g * y;
    double D = noise_expect(zeta, q, c,
                            [&](double u) { return g.derivative_extended(u); });
    // implicit-function rule on y = <g(z + R_g y + .)>
    return D / (1.0 - R_g * D);
}

double Ahat(double z_g, double R_g, const PriceFunction& g,
            const EffectiveNoise& zeta, const QuadratureGrid& q) {
    return z_g + R_g * ghat(z_g, R_g, g, zeta, q);
}

double reaction_Rx(double R_g, double q_x, double b, double alpha,
                   const PriceFunction& g, const NoiseModel& noise,
                   const QuadratureGrid& q) {
    EffectiveNoise zeta = make_effective_noise(noise, q_x);
    double sg = std::sqrt(0.5 * (1.0 + q_x));
    double I = gauss_expect(q, b, sg, [&](double z) {
        return ghat_prime(z, R_g, g, zeta, q);
    });
    return -0.5 * alpha * I;
}

std::pair<double, double> reaction_Rg(double R_x, double q_g, double alpha) {
    require_negative_reaction(R_x);
    if (!(q_g > 0.0)) {
        std::ostringstream os;
        os << "field self-overlap q_g = " << q_g
           << " has no width; the response formulas need q_g > 0";
        throw DegenerateField(os.str());
    }
    // z_x ~ N(0, alpha q_g / 2): P(|z_x| < |R_x|) = erf(|R_x| / sqrt(alpha q_g))
    double one_minus_phi = std::erf(-R_x / std::sqrt(alpha * q_g));
    double R_g = one_minus_phi / (2.0 * R_x);
    return {R_g, 1.0 - one_minus_phi};
}

OrderParams update_order_params(double R_x, double R_g, double b, double q_x,
                                double q_g, double alpha, const PriceFunction& g,
                                const NoiseModel& noise, const QuadratureGrid& q) {
    require_negative_reaction(R_x);
    if (!(q_g > 0.0))
        throw DegenerateField("order-parameter update needs q_g > 0");

    OrderParams out;
    // clipped-linear self overlap in closed form
    double sx = std::sqrt(0.5 * alpha * q_g);
    out.q_x = clipped_linear_self_overlap(-R_x / sx);

    // field moments by quadrature under z_g ~ N(b, (1 + q_x)/2)
    EffectiveNoise zeta = make_effective_noise(noise, q_x);
    double sg = std::sqrt(0.5 * (1.0 + q_x));
    const double scale = std::sqrt(2.0) * sg;
    const int n = q.order;
    double acc_g = 0.0, acc_A = 0.0;
    auto at = [&](double z, double& yg, double& dA) {
        double y = solve_ghat(z, R_g, g, zeta, q, nullptr);
        yg = y * y;
        double d = z + R_g * y - b;
        dA = d * d;
    };
    for (int k = 0; k < n / 2; ++k) {
        int j = n - 1 - k;
        double y1, a1, y2, a2;
        at(b + scale * q.nodes[k], y1, a1);
        at(b + scale * q.nodes[j], y2, a2);
        acc_g += q.weights[k] * (y1 + y2);
        acc_A += q.weights[k] * (a1 + a2);
    }
    if (n % 2) {
        double y1, a1;
        at(b + scale * q.nodes[n / 2], y1, a1);
        acc_g += q.weights[n / 2] * y1;
        acc_A += q.weights[n / 2] * a1;
    }
    static const double inv_sqrt_pi = 0.5641895835477562869;
    out.q_g = acc_g * inv_sqrt_pi;
    out.q_A = acc_A * inv_sqrt_pi;
    return out;
}

double solve_bias(double R_g, double q_x, const PriceFunction& g,
                  const NoiseModel& noise, const QuadratureGrid& q) {
    EffectiveNoise zeta = make_effective_noise(noise, q_x);
    double sg = std::sqrt(0.5 * (1.0 + q_x));
    auto H = [&](double b) {
        return gauss_expect(q, b, sg, [&](double z) {
            return solve_ghat(z, R_g, g, zeta, q, nullptr);
        });
    };

    double b0 = argmin_abs_g(g);
    double h0 = H(b0);
    // Exactly zero at the symmetric point (odd g cancels pairwise in the
    // quadrature): the market carries no producer drift, b = b0 exactly.
    if (h0 == 0.0) return b0;

    // <ghat> is increasing in b; walk in the descending direction of h0
    // until the sign flips, then polish with Brent.
    double step = 0.1 * (1.0 + std::abs(b0));
    double a = b0, fa = h0;
    double bb = b0, fb = h0;
    const double lo_lim = g.range().lo, hi_lim = g.range().hi;
    for (int it = 0; it < 200; ++it) {
        if (h0 > 0.0) {
            bb = a;
            fb = fa;
            a -= step;
            if (a < lo_lim) throw NoBracket("bias search hit the lower range edge");
            fa = H(a);
            if (fa <= 0.0) break;
        } else {
            a = bb;
            fa = fb;
            bb += step;
            if (bb > hi_lim) throw NoBracket("bias search hit the upper range edge");
            fb = H(bb);
            if (fb >= 0.0) break;
        }
        step *= 2.0;
        if (it == 199) throw NoBracket("bias search found no sign change");
    }
    return brent([&](double x) { return H(x); }, a, bb, fa, fb, 1e-13, 200,
                 "bias solve");
}

Reactions solve_reactions(double q_x, double q_g, double b, double alpha,
                          const PriceFunction& g, const NoiseModel& noise,
                          const QuadratureGrid& q, double warm_R_g) {
    if (!(q_g > 0.0))
        throw DegenerateField("reaction solve needs q_g > 0");
    EffectiveNoise zeta = make_effective_noise(noise, q_x);
    double sg = std::sqrt(0.5 * (1.0 + q_x));
    const double scale = std::sqrt(2.0) * sg;
    const int n = q.order;

    // node positions are fixed within this solve; ghat seeds carry across
    // R_g trials so later Newton solves start next to their root
    std::vector<double> zs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) zs[static_cast<std::size_t>(k)] = b + scale * q.nodes[k];
    std::vector<double> seeds(static_cast<std::size_t>(n));
    bool have_seeds = false;

    double cur_Rx = 0.0, cur_phi = 0.0;
    auto f = [&](double Rg) {
        // integral of ghat' under the field law
        double acc = 0.0;
        auto node = [&](int k) {
            const double* sd = have_seeds ? &seeds[static_cast<std::size_t>(k)] : nullptr;
            double y = solve_ghat(zs[static_cast<std::size_t>(k)], Rg, g, zeta, q, sd);
            seeds[static_cast<std::size_t>(k)] = y;
            double c = zs[static_cast<std::size_t>(k)] + Rg * y;
            double D = noise_expect(zeta, q, c,
                                    [&](double u) { return g.derivative_extended(u); });
            return D / (1.0 - Rg * D);
        };
        for (int k = 0; k < n / 2; ++k)
            acc += q.weights[k] * (node(k) + node(n - 1 - k));
        if (n % 2) acc += q.weights[n / 2] * node(n / 2);
        static const double inv_sqrt_pi = 0.5641895835477562869;
        double I = acc * inv_sqrt_pi;
        have_seeds = true;

        cur_Rx = -0.5 * alpha * I;
        auto [Rg_out, phi] = reaction_Rg(cur_Rx, q_g, alpha);
        cur_phi = phi;
        return Rg - Rg_out;
    };

    // f(0) > 0 (a first response always pushes R_g negative); expand the
    // negative side until the sign flips.
    double hi = 0.0;
    double fhi = f(0.0);
    if (fhi == 0.0) return {cur_Rx, 0.0, cur_phi};
    double lo = std::min(2.0 * warm_R_g, -0.05);
    double flo = f(lo);
    int guard = 0;
    while (flo > 0.0) {
        lo *= 2.0;
        if (++guard > 60) throw NoBracket("reaction solve: R_g bracket exhausted");
        flo = f(lo);
    }
    double root = brent([&](double x) { return f(x); }, lo, hi, flo, fhi,
                        1e-14 * (1.0 + std::abs(lo)), 300, "reaction solve");
    // sync side values with the root
    f(root);
    return {cur_Rx, root, cur_phi};
}

CavitySolution solve_self_consistent(double alpha, const PriceFunction& g,
                                     const NoiseModel& noise,
                                     const SolveOptions& opts) {
    if (!(alpha > 0.0)) throw Error("solve: alpha must be positive");
    const QuadratureGrid& q = QuadratureGrid::hermite(opts.quad_order);

    double q_x = 0.5, q_g = 0.1, b = argmin_abs_g(g);
    double R_x = -1.0, R_g = -0.1, phi = 0.0;
    if (opts.warm_start) {
        q_x = opts.warm_start->q_x;
        q_g = opts.warm_start->q_g;
        b = opts.warm_start->b;
        R_x = opts.warm_start->R_x;
        R_g = opts.warm_start->R_g;
    }

    bool converged = false;
    int iters = 0;
    double residual = 0.0;
    for (int it = 1; it <= opts.max_outer; ++it) {
        iters = it;
        Reactions r = solve_reactions(q_x, q_g, b, alpha, g, noise, q, R_g);
        double margin = alpha - (1.0 - r.phi);
        if (margin < opts.rsb_guard) {
            std::ostringstream os;
            os << "alpha = " << alpha << " is at or below the phase transition: "
               << "margin alpha - (1 - phi) = " << margin << " fell under the "
               << "guard " << opts.rsb_guard << " at sweep " << it
               << " (phi = " << r.phi << "). The stationary ansatz solved here "
               << "is invalid in the crowded phase.";
            throw ReplicaSymmetryBroken(os.str());
        }
        OrderParams op =
            update_order_params(r.R_x, r.R_g, b, q_x, q_g, alpha, g, noise, q);
        double qx_new = q_x + opts.damping * (op.q_x - q_x);
        double qg_new = q_g + opts.damping * (op.q_g - q_g);
        double b_new = solve_bias(r.R_g, qx_new, g, noise, q);

        residual = std::max({std::abs(qx_new - q_x), std::abs(qg_new - q_g),
                             std::abs(b_new - b), std::abs(r.R_x - R_x),
                             std::abs(r.R_g - R_g)});
        q_x = qx_new;
        q_g = qg_new;
        b = b_new;
        R_x = r.R_x;
        R_g = r.R_g;
        phi = r.phi;
        if (residual < opts.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "self-consistent solve at alpha = " << alpha << " did not reach "
           << "tolerance " << opts.tol << " in " << opts.max_outer
           << " sweeps (last residual " << residual << ")";
        throw NotConverged(os.str());
    }

    CavitySolution sol;
    sol.alpha = alpha;
    sol.q_x = q_x;
    sol.q_g = q_g;
    sol.b = b;
    sol.R_x = R_x;
    sol.R_g = R_g;
    sol.phi = phi;
    sol.margin = alpha - (1.0 - phi);
    OrderParams fin = update_order_params(R_x, R_g, b, q_x, q_g, alpha, g, noise, q);
    sol.q_A = fin.q_A;
    sol.sigma2 = noise.variance() + 0.5 * (1.0 - q_x) + sol.q_A;
    sol.sigma = std::sqrt(sol.sigma2);
    sol.converged = true;
    sol.iterations = iters;
    sol.residual = residual;
    return sol;
}

AlphaCResult find_alpha_c(const PriceFunction& g, const NoiseModel& noise,
                          double lo, double hi, const SolveOptions& opts) {
    auto probe = [&](double a, const CavitySolution* warm)
        -> std::optional<CavitySolution> {
        SolveOptions o = opts;
        o.warm_start = warm;
        try {
            return solve_self_consistent(a, g, noise, o);
        } catch (const ReplicaSymmetryBroken&) {
            return std::nullopt;
        } catch (const NotConverged&) {
            return std::nullopt;
        }
    };

    // make sure the bracket actually straddles the refusal boundary
    std::optional<CavitySolution> at_hi = probe(hi, nullptr);
    int guard = 0;
    while (!at_hi) {
        hi *= 1.6;
        if (++guard > 12)
            throw NoBracket("no converged stationary phase found while raising alpha");
        at_hi = probe(hi, nullptr);
    }
    if (probe(lo, nullptr))
        throw NoBracket("the solver accepted the low end of the bracket; "
                        "lower `lo` to enclose the transition");

    CavitySolution last_good = *at_hi;
    while (hi - lo > 1e-4) {
        double mid = 0.5 * (lo + hi);
        if (auto s = probe(mid, &last_good)) {
            hi = mid;
            last_good = *s;
        } else {
            lo = mid;
        }
    }

    // margin extrapolation from converged solutions just above the boundary
    AlphaCResult res;
    res.boundary = hi;
    std::vector<double> as, ms;
    CavitySolution warm = last_good;
    std::vector<double> offsets = {0.0, 2e-3, 4e-3, 6e-3, 1e-2, 2e-2};
    for (double off : offsets) {
        double a = hi + off;
        std::optional<CavitySolution> s =
            off == 0.0 ? std::optional<CavitySolution>(last_good) : probe(a, &warm);
        if (!s) continue;
        res.probes.push_back(*s);
        warm = *s;
        if (off <= 6e-3 + 1e-12) {
            as.push_back(a);
            ms.push_back(s->margin);
        }
    }
    if (as.size() < 2)
        throw NotConverged("not enough converged probes near the boundary to "
                           "extrapolate the transition");

    // least-squares quadratic m(a) centered at the boundary, root below it
    double a0 = as.front();
    double alpha_c;
    if (as.size() == 2) {
        double slope = (ms[1] - ms[0]) / (as[1] - as[0]);
        alpha_c = as[0] - ms[0] / slope;
    } else {
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
        for (std::size_t i = 0; i < as.size(); ++i) {
            double x = as[i] - a0, y = ms[i];
            double x2 = x * x;
            s0 += 1;
            s1 += x;
            s2 += x2;
            s3 += x2 * x;
            s4 += x2 * x2;
            t0 += y;
            t1 += x * y;
            t2 += x2 * y;
        }
        // normal equations for y = c0 + c1 x + c2 x^2 (Cramer)
        double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s2 * s3) +
                     s2 * (s1 * s3 - s2 * s2);
        double c0 = (t0 * (s2 * s4 - s3 * s3) - s1 * (t1 * s4 - t2 * s3) +
                     s2 * (t1 * s3 - t2 * s2)) / det;
        double c1 = (s0 * (t1 * s4 - t2 * s3) - t0 * (s1 * s4 - s2 * s3) +
                     s2 * (s1 * t2 - s2 * t1)) / det;
        double c2 = (s0 * (s2 * t2 - s3 * t1) - s1 * (s1 * t2 - s2 * t1) +
                     t0 * (s1 * s3 - s2 * s2)) / det;
        // root of the fitted parabola: the transition sits just below the
        // boundary, so take the largest root that is not above it
        double disc = c1 * c1 - 4.0 * c2 * c0;
        double linear_root = a0 - c0 / c1;
        alpha_c = linear_root;
        if (std::abs(c2) > 1e-12 && disc >= 0.0) {
            double r1 = (-c1 + std::sqrt(disc)) / (2.0 * c2);
            double r2 = (-c1 - std::sqrt(disc)) / (2.0 * c2);
            double best = -1.0;
            bool found = false;
            for (double r : {r1, r2}) {
                if (r <= 1e-9 && (!found || r > best)) {
                    best = r;
                    found = true;
                }
            }
            if (found) alpha_c = a0 + best;
        }
        // extrapolating further than the probe span means the fit broke down
        if (!(alpha_c <= a0 + 1e-9 && alpha_c >= a0 - 1e-2)) alpha_c = linear_root;
    }
    res.alpha_c = alpha_c;
    res.phi_c = 1.0 - alpha_c;  // the margin vanishes at the transition
    return res;
}

APrediction predict_A_distribution(const CavitySolution& sol) {
    return {sol.b, sol.sigma2};
}

}  // namespace mg
