#include <doctest.h>

#include <set>
#include <vector>

#include "mg/rng.hpp"

using namespace mg;

TEST_CASE("splitmix64 matches the reference output sequence") {
    // Reference values from an independent implementation of the standard
    // splitmix64 finalizer, state starting at 0.
    std::uint64_t s = 0;
    CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("derive_seed matches frozen reference values") {
    CHECK(derive_seed(42, Stream::strategies, 0) == 488112048770579680ULL);
    CHECK(derive_seed(42, Stream::ensemble, 3) == 10961228273713849309ULL);
    CHECK(derive_seed(0, Stream::misc, 0) == 13833810827369920702ULL);
}

TEST_CASE("derive_seed is deterministic and the index defaults to 0") {
    CHECK(derive_seed(7, Stream::noise, 5) == derive_seed(7, Stream::noise, 5));
    CHECK(derive_seed(7, Stream::noise) == derive_seed(7, Stream::noise, 0));
}

TEST_CASE("streams with different purpose, index, or master never collide") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {0ULL, 1ULL, 2ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL})
        for (auto purpose : {Stream::strategies, Stream::scores, Stream::information,
                             Stream::noise, Stream::ensemble, Stream::misc})
            for (std::uint64_t index = 0; index < 20; ++index)
                seen.insert(derive_seed(master, purpose, index));
    CHECK(seen.size() == 5u * 6u * 20u);
}

TEST_CASE("adjacent masters give uncorrelated generators") {
    // Crude independence check: bitwise agreement between the first outputs
    // of neighbouring masters stays near the 50% a fair coin would give.
    long long agree = 0, total = 0;
    for (std::uint64_t m = 0; m < 2000; ++m) {
        std::uint64_t a = derive_seed(m, Stream::information);
        std::uint64_t b = derive_seed(m + 1, Stream::information);
        for (int bit = 0; bit < 64; ++bit) {
            agree += ((a >> bit) & 1) == ((b >> bit) & 1);
            ++total;
        }
    }
    double frac = static_cast<double>(agree) / static_cast<double>(total);
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
}

TEST_CASE("make_stream reproduces the same draw sequence") {
    auto g1 = make_stream(123, Stream::scores, 9);
    auto g2 = make_stream(123, Stream::scores, 9);
    for (int k = 0; k < 100; ++k) CHECK(g1() == g2());
}
