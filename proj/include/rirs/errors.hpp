#pragma once

#include <stdexcept>
#include <string>

namespace rirs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (e.g. quantile level not in (0,1)).
struct DomainError : Error {
    using Error::Error;
};

/// A documented precondition failed; the message carries the witness.
struct PreconditionError : Error {
    using Error::Error;
};

/// Mismatched shapes: incompatible partitions, sub-block masses, cell layouts.
struct StructuralError : Error {
    using Error::Error;
};

/// Not enough mass/space to carry out a construction.
struct CapacityError : Error {
    using Error::Error;
};

/// A numeric evaluation could not be completed or certified.
struct EvaluationError : Error {
    using Error::Error;
};

/// A symbolic convergence classification has no decision rule for the input.
struct ClassificationError : Error {
    using Error::Error;
};

/// Malformed specification object (norm/measure/distortion/config).
struct SpecError : Error {
    using Error::Error;
};

}  // namespace rirs
