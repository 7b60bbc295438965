#pragma once

#include <cstdint>
#include <random>

namespace mg {

/**
 * Deterministic seed derivation.
 *
 * Every consumer of randomness (strategy draws, score init, information
 * stream, exogenous noise, ensemble members, ...) gets its own generator
 * seeded by a counter-based split of the master seed.  Splitting instead of
 * sharing one generator makes results independent of evaluation order and of
 * how many worker threads execute an ensemble: run k always sees the same
 * streams no matter which thread runs it.
 */

/// splitmix64 step: advances the state and returns a well-mixed 64-bit word.
/// Standard finalizer constants; passes through all 2^64 outputs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;  // golden-ratio increment
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Purposes a run draws randomness for.  The numeric values are part of the
/// reproducibility contract: changing them changes every seeded run.
enum class Stream : std::uint64_t {
    strategies = 1,  // quenched strategy tables
    scores = 2,      // initial score tie-breaking jitter
    information = 3, // the per-step information-state index
    noise = 4,       // exogenous demand noise
    ensemble = 5,    // per-member seeds of an ensemble
    misc = 6,        // anything test- or tool-local
};

/// Derive a deterministic sub-seed from (master, purpose, index).
inline std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master;
    (void)splitmix64(s);                       // decorrelate nearby masters
    s ^= static_cast<std::uint64_t>(purpose) * 0xD2B74407B1CE6E93ULL;
    (void)splitmix64(s);
    s ^= index * 0xCA5A826395121157ULL;
    return splitmix64(s);
}

/// A ready-to-use generator for one purpose.
inline std::mt19937_64 make_stream(std::uint64_t master, Stream purpose,
                                   std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(master, purpose, index));
}

}  // namespace mg
