#pragma once

#include <stdexcept>
#include <string>

namespace cirl {

/// Raised when inputs violate a documented precondition (dimensions, ranges,
/// stochasticity, non-finite values).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a linear solve fails on data that should have been well posed.
/// Seeing this means an upstream invariant was broken.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cirl
