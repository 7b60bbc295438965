#include <doctest.h>

#include <cmath>

#include "mg/cavity.hpp"
#include "mg/quadrature.hpp"

using namespace mg;

TEST_CASE("grid basics: weights sum to sqrt(pi), nodes ascend, cache is stable") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    REQUIRE(q.order == 64);
    double wsum = 0.0;
    for (double w : q.weights) wsum += w;
    CHECK(wsum == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    for (int k = 1; k < q.order; ++k) CHECK(q.nodes[k] > q.nodes[k - 1]);
    CHECK(&QuadratureGrid::hermite(64) == &q);  // cached, not rebuilt
}

TEST_CASE("nodes and weights are symmetrized exactly") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    for (int k = 0; k < q.order / 2; ++k) {
        int j = q.order - 1 - k;
        CHECK(q.nodes[j] == -q.nodes[k]);    // bitwise negation
        CHECK(q.weights[j] == q.weights[k]); // bitwise equality
    }
}

TEST_CASE("gaussian moments are exact to roundoff") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    CHECK(gauss_expect(q, 0.0, 1.0, [](double) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gauss_expect(q, 0.0, 1.0, [](double z) { return z * z; }) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gauss_expect(q, 0.0, 1.0, [](double z) { return z * z * z * z; }) ==
          doctest::Approx(3.0).epsilon(1e-13));
    // general mean/sd: E[z^2] = m^2 + s^2
    CHECK(gauss_expect(q, 1.7, 2.3, [](double z) { return z * z; }) ==
          doctest::Approx(1.7 * 1.7 + 2.3 * 2.3).epsilon(1e-13));
    // lognormal mean: E[e^z] = e^{1/2}
    CHECK(gauss_expect(q, 0.0, 1.0, [](double z) { return std::exp(z); }) ==
          doctest::Approx(std::exp(0.5)).epsilon(1e-12));
}

namespace {
// Kept out of line on purpose: the exact pairwise cancellation below is
// guaranteed for integrands whose value arrives through an opaque call (the
// solver's integrands all evaluate the price function in another translation
// unit).  A fully inlined integrand may legally lose the last bit to FMA
// contraction at the summation site, so that is not the contract.
__attribute__((noinline)) double odd_cubic(double z) {
    return z * (1.0 + z * z);
}
}  // namespace

TEST_CASE("odd integrands behind a call cancel to exactly 0.0 at zero mean") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    double v = gauss_expect(q, 0.0, 1.3, odd_cubic);
    CHECK(v == 0.0);  // bitwise: paired summation over negated nodes
}

TEST_CASE("sd = 0 collapses the expectation to a point evaluation") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    CHECK(gauss_expect(q, 2.5, 0.0, [](double z) { return z * z; }) == 6.25);
}

TEST_CASE("doubling the order leaves smooth expectations unchanged") {
    // integrands of the solver's class: entire or with far-away singularities
    auto erf_f = [](double z) { return std::erf(z); };
    double a = gauss_expect(QuadratureGrid::hermite(64), 0.3, 1.5, erf_f);
    double b = gauss_expect(QuadratureGrid::hermite(128), 0.3, 1.5, erf_f);
    CHECK(std::abs(a - b) < 1e-10);
    auto root_f = [](double z) { return std::sqrt(1.0 + z * z / 9.0); };
    double c = gauss_expect(QuadratureGrid::hermite(64), 0.3, 1.5, root_f);
    double d = gauss_expect(QuadratureGrid::hermite(128), 0.3, 1.5, root_f);
    CHECK(std::abs(c - d) < 1e-12);
}

TEST_CASE("noise_expect mixes discrete atoms exactly") {
    const QuadratureGrid& q = QuadratureGrid::hermite(64);
    EffectiveNoise z;
    z.sd = 0.0;
    z.atoms = {{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}};
    auto f = [](double u) { return u * u; };
    // E[(c + zeta)^2] = c^2 + Var(zeta) with these atoms: Var = 0.5
    CHECK(noise_expect(z, q, 2.0, f) == doctest::Approx(4.5).epsilon(1e-14));
    z.sd = 0.7;  // add a gaussian around each atom
    CHECK(noise_expect(z, q, 2.0, f) ==
          doctest::Approx(4.5 + 0.49).epsilon(1e-13));
}
