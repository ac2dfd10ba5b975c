#pragma once

#include <stdexcept>
#include <string>

namespace svlq {

// A standing hypothesis on the data ((A3), (A4), ...) does not hold.
class AssumptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Singular or badly conditioned linear algebra.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An operation was called outside its precondition (e.g. beta <= 1/2 where a
// terminal value is required).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace svlq
