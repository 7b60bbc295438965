#include <doctest.h>

#include <cmath>
#include <vector>

#include "mg/errors.hpp"
#include "mg/noise.hpp"
#include "mg/rng.hpp"

using namespace mg;

TEST_CASE("the none model is exactly silent") {
    NoiseModel m = NoiseModel::none();
    CHECK(m.variance() == 0.0);
    CHECK(m.kind() == NoiseModel::Kind::none);
    auto gen = make_stream(1, Stream::noise);
    for (int k = 0; k < 10; ++k) CHECK(m.sample(gen) == 0.0);
}

TEST_CASE("gaussian sd = 0 degrades to the none model") {
    NoiseModel m = NoiseModel::gaussian(0.0);
    CHECK(m.kind() == NoiseModel::Kind::none);
    CHECK(m.variance() == 0.0);
    CHECK_THROWS_AS(NoiseModel::gaussian(-1.0), Error);
}

TEST_CASE("gaussian sampling reproduces its first two moments") {
    const double sd = 0.7;
    NoiseModel m = NoiseModel::gaussian(sd);
    CHECK(m.variance() == doctest::Approx(0.49).epsilon(1e-15));
    CHECK(m.sd() == sd);
    auto gen = make_stream(99, Stream::noise);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        double v = m.sample(gen);
        s += v;
        s2 += v * v;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(0.49).epsilon(0.02));
}

TEST_CASE("discrete atoms are shifted to an exactly usable zero mean") {
    NoiseModel m = NoiseModel::discrete({1.0, 2.0, 4.0}, {0.5, 0.25, 0.25});
    REQUIRE(m.atoms().size() == 3);
    // mean was 2.0, so atoms become {-1, 0, 2} with the same probabilities
    CHECK(m.atoms()[0].first == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(m.atoms()[1].first == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(m.atoms()[2].first == doctest::Approx(2.0).epsilon(1e-15));
    double mean = 0.0, var = 0.0;
    for (auto [v, p] : m.atoms()) {
        mean += p * v;
        var += p * v * v;
    }
    CHECK(std::abs(mean) < 1e-15);
    CHECK(m.variance() == doctest::Approx(var).epsilon(1e-15));
    CHECK(m.variance() == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("discrete probabilities are normalized") {
    NoiseModel m = NoiseModel::discrete({-1.0, 1.0}, {2.0, 2.0});
    CHECK(m.atoms()[0].second == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.variance() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("discrete sampling reproduces the atom frequencies") {
    NoiseModel m = NoiseModel::discrete({-1.0, 0.0, 3.0}, {0.2, 0.5, 0.3});
    auto gen = make_stream(7, Stream::noise);
    const int n = 100000;
    std::vector<int> count(3, 0);
    for (int k = 0; k < n; ++k) {
        double v = m.sample(gen);
        bool matched = false;
        for (std::size_t a = 0; a < m.atoms().size(); ++a)
            if (v == m.atoms()[a].first) {
                ++count[a];
                matched = true;
                break;
            }
        CHECK(matched);  // samples are always exactly one of the atoms
    }
    for (std::size_t a = 0; a < 3; ++a) {
        double p = m.atoms()[a].second;
        double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(count[a] / static_cast<double>(n) - p) < 5.0 * se);
    }
}

TEST_CASE("malformed discrete specifications are refused") {
    CHECK_THROWS_AS(NoiseModel::discrete({}, {}), Error);
    CHECK_THROWS_AS(NoiseModel::discrete({1.0}, {0.5, 0.5}), Error);
    CHECK_THROWS_AS(NoiseModel::discrete({1.0, 2.0}, {0.5, -0.5}), Error);
    CHECK_THROWS_AS(NoiseModel::discrete({1.0, 2.0}, {0.0, 0.0}), Error);
}
