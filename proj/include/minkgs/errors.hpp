#pragma once

#include <stdexcept>
#include <string>

namespace minkgs {

/// Caller violated an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The nonlinearity does not satisfy a structural assumption (sign pattern,
/// positivity of the primitive) needed by the requested operation.
class AssumptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace minkgs
