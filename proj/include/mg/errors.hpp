#pragma once

#include <stdexcept>
#include <string>

namespace mg {

/**
 * Base class for all library errors.  Every failure mode that callers are
 * expected to handle gets its own type below so tests and the CLI can react
 * to the *kind* of failure, not a message string.
 */
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Price function evaluated outside its operating range.
struct OutOfRange : Error {
    using Error::Error;
};

/// An observable was requested over an empty measurement window.
struct EmptyWindow : Error {
    using Error::Error;
};

/// A two-strategy-only observable was requested on a run with S != 2.
struct WrongS : Error {
    using Error::Error;
};

/// Some information state was visited too rarely for a conditional estimate.
struct InsufficientCoverage : Error {
    using Error::Error;
};

/// An ensemble statistic was requested with too few members.
struct InsufficientEnsemble : Error {
    using Error::Error;
};

/// Reaction term R_x is not negative, so downstream formulas are undefined.
struct DegenerateReaction : Error {
    using Error::Error;
};

/// The field distribution has zero width (q_g = 0); the self-consistent
/// response is a pure point mass and the generic formulas do not apply.
struct DegenerateField : Error {
    using Error::Error;
};

/// A bracketing search failed to enclose a sign change.
struct NoBracket : Error {
    using Error::Error;
};

/// An iterative solve hit its iteration cap before meeting tolerance.
struct NotConverged : Error {
    using Error::Error;
};

/// The self-consistent solution was requested at or below the phase
/// transition, where the stationary ansatz used here stops being valid.
struct ReplicaSymmetryBroken : Error {
    using Error::Error;
};

/// Configuration file missing, malformed, or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mg
