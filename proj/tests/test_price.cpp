#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mg/errors.hpp"
#include "mg/price.hpp"

using namespace mg;

TEST_CASE("linear price is the identity with unit slope") {
    PriceFunction g = PriceFunction::linear({-10.0, 10.0});
    for (double x : {-10.0, -3.25, 0.0, 0.1, 7.75, 10.0}) {
        CHECK(g.eval(x) == x);  // bitwise
        CHECK(g.derivative(x) == 1.0);
    }
    CHECK(g.kind() == PriceFunction::Kind::linear);
}

TEST_CASE("polynomial evaluates the stated coefficients") {
    // g(x) = x + 0.05 x^2
    PriceFunction g = PriceFunction::polynomial({1.0, 0.05}, {-4.0, 4.0});
    CHECK(g.eval(2.0) == doctest::Approx(2.2).epsilon(1e-15));
    CHECK(g.eval(-2.0) == doctest::Approx(-1.8).epsilon(1e-15));
    CHECK(g.derivative(2.0) == doctest::Approx(1.2).epsilon(1e-15));
    // cubic: x + 0.1 x^3
    PriceFunction c = PriceFunction::polynomial({1.0, 0.0, 0.1}, {-3.0, 3.0});
    CHECK(c.eval(2.0) == doctest::Approx(2.8).epsilon(1e-15));
    CHECK(c.derivative(2.0) == doctest::Approx(1.0 + 0.3 * 4.0).epsilon(1e-15));
}

TEST_CASE("derivative agrees with a central finite difference") {
    PriceFunction g = PriceFunction::polynomial({1.0, 0.03, 0.02}, {-3.0, 3.0});
    const double h = 1e-6;
    for (double x : {-2.5, -1.0, 0.0, 0.7, 2.9}) {
        double fd = (g.eval_extended(x + h) - g.eval_extended(x - h)) / (2.0 * h);
        CHECK(g.derivative(x) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("non-increasing shapes are refused at construction") {
    // 1 + 0.2 x < 0 below x = -5: not monotone on a wide range
    CHECK_THROWS_AS(PriceFunction::polynomial({1.0, 0.1}, {-34.0, 34.0}), Error);
    // decreasing line
    CHECK_THROWS_AS(PriceFunction::polynomial({-1.0}, {-1.0, 1.0}), Error);
    // empty coefficients
    CHECK_THROWS_AS(PriceFunction::polynomial({}, {-1.0, 1.0}), Error);
    // zero-width range
    CHECK_THROWS_AS(PriceFunction::linear({2.0, 2.0}), Error);
    // non-increasing table
    CHECK_THROWS_AS(PriceFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0},
                                             {0.0, 2.0}),
                    Error);
    CHECK_THROWS_AS(PriceFunction::tabulated({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0},
                                             {0.0, 1.0}),
                    Error);
    // range wider than the table
    CHECK_THROWS_AS(PriceFunction::tabulated({0.0, 1.0}, {0.0, 1.0}, {-1.0, 1.0}),
                    Error);
    // the same quadratic is fine on a range where it is increasing
    CHECK_NOTHROW(PriceFunction::polynomial({1.0, 0.1}, {-4.0, 4.0}));
}

TEST_CASE("out-of-range evaluation names the direction and distance") {
    PriceFunction g = PriceFunction::linear({-2.0, 2.0});
    CHECK_THROWS_AS(g.eval(2.5), OutOfRange);
    CHECK_THROWS_AS(g.eval(-2.5), OutOfRange);
    CHECK_THROWS_AS(g.derivative(3.0), OutOfRange);
    try {
        g.eval(2.5);
        FAIL("expected OutOfRange");
    } catch (const OutOfRange& e) {
        std::string msg = e.what();
        CHECK(msg.find("above") != std::string::npos);
        CHECK(msg.find("0.5") != std::string::npos);  // over by 0.5
    }
    try {
        g.eval(-2.5);
        FAIL("expected OutOfRange");
    } catch (const OutOfRange& e) {
        std::string msg = e.what();
        CHECK(msg.find("below") != std::string::npos);
    }
    // endpoints are inside the closed range
    CHECK_NOTHROW(g.eval(2.0));
    CHECK_NOTHROW(g.eval(-2.0));
}

TEST_CASE("the extended curve matches eval inside and continues linearly outside") {
    PriceFunction g = PriceFunction::polynomial({1.0, 0.05}, {-4.0, 4.0});
    for (double x : {-4.0, -1.3, 0.0, 2.2, 4.0})
        CHECK(g.eval_extended(x) == g.eval(x));  // bitwise
    // beyond the range the curve is the edge tangent, not the formula:
    // g(4) = 4.8, g'(4) = 1.4
    CHECK(g.eval_extended(10.0) == doctest::Approx(4.8 + 1.4 * 6.0).epsilon(1e-15));
    CHECK(g.derivative_extended(10.0) == 1.4);
    CHECK(g.eval_extended(-10.0) == doctest::Approx(-3.2 + 0.6 * -6.0).epsilon(1e-15));
    CHECK(g.derivative_extended(-10.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_NOTHROW(g.eval_extended(1e6));

    // C^1 at the seams and increasing on the whole axis, even though the
    // raw formula turns around at x = -10
    CHECK(g.eval_extended(4.0 + 1e-9) == doctest::Approx(g.eval(4.0)).epsilon(1e-8));
    CHECK(g.eval_extended(-4.0 - 1e-9) == doctest::Approx(g.eval(-4.0)).epsilon(1e-8));
    double prev = g.eval_extended(-120.0);
    for (int k = 1; k <= 60; ++k) {
        double x = -120.0 + 4.0 * k;
        double v = g.eval_extended(x);
        CHECK(v > prev);
        prev = v;
    }

    // a line is its own continuation
    PriceFunction lin = PriceFunction::linear({-30.0, 30.0});
    CHECK(lin.eval_extended(1e6) == 1e6);
    CHECK(lin.derivative_extended(-1e6) == 1.0);
}

TEST_CASE("odd polynomials continue as exact bitwise-odd functions") {
    PriceFunction g = PriceFunction::polynomial({1.0, 0.0, 0.07}, {-2.0, 2.0});
    for (double x : {0.3, 1.9, 5.0, 41.7})
        CHECK(g.eval_extended(-x) == -g.eval_extended(x));  // bitwise
}

TEST_CASE("tabulated interpolation hits the nodes and stays monotone") {
    std::vector<double> xs, ys;
    for (int k = 0; k <= 8; ++k) {
        double x = -2.0 + 0.5 * k;
        xs.push_back(x);
        ys.push_back(std::sinh(x));
    }
    PriceFunction g = PriceFunction::tabulated(xs, ys, {-2.0, 2.0});
    for (std::size_t k = 0; k < xs.size(); ++k)
        CHECK(g.eval(xs[k]) == doctest::Approx(ys[k]).epsilon(1e-14));
    // interpolation error of a shape-preserving cubic on this grid
    for (double x = -2.0; x <= 2.0; x += 0.01)
        CHECK(g.eval(x) == doctest::Approx(std::sinh(x)).epsilon(0.02));
    // increasing everywhere on the range
    double prev = g.eval(-2.0);
    for (double x = -1.99; x <= 2.0; x += 0.01) {
        double v = g.eval(x);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("tabulated continuation is linear with the end slopes, C1 at the edges") {
    std::vector<double> xs = {-1.0, 0.0, 1.0, 2.0};
    std::vector<double> ys = {-1.0, 0.0, 2.0, 6.0};
    PriceFunction g = PriceFunction::tabulated(xs, ys, {-1.0, 2.0});
    double d_hi = g.derivative(2.0);
    double d_lo = g.derivative(-1.0);
    // value continuity at the edges
    CHECK(g.eval_extended(2.0) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(g.eval_extended(-1.0) == doctest::Approx(-1.0).epsilon(1e-14));
    // beyond the table: straight lines through the edge with the edge slope
    CHECK(g.eval_extended(5.0) == doctest::Approx(6.0 + d_hi * 3.0).epsilon(1e-13));
    CHECK(g.eval_extended(-4.0) == doctest::Approx(-1.0 + d_lo * -3.0).epsilon(1e-13));
    CHECK(g.derivative_extended(100.0) == d_hi);
    CHECK(g.derivative_extended(-100.0) == d_lo);
    // still increasing across the joins
    CHECK(g.eval_extended(2.0 + 1e-9) > g.eval_extended(2.0 - 1e-9));
    CHECK(g.eval_extended(-1.0 + 1e-9) > g.eval_extended(-1.0 - 1e-9));
}

TEST_CASE("describe names the family and range") {
    CHECK(PriceFunction::linear({-1.0, 1.0}).describe().find("linear") !=
          std::string::npos);
    CHECK(PriceFunction::polynomial({1.0, 0.05}, {-4.0, 4.0})
              .describe()
              .find("polynomial") != std::string::npos);
}
