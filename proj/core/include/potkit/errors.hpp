#pragma once

#include <stdexcept>

namespace potkit {

// Bad scalar argument (out-of-range lambda, nonpositive epsilon, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between vectors/matrices/images.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of an operation (negative mass, ...).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A plan that cannot be repaired (zero mass where s > 0); signals solver
// failure upstream rather than bad user input.
struct DegeneratePlanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invariant broken inside the library; always a bug, never a user error.
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace potkit
