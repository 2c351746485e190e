#pragma once

#include <stdexcept>
#include <string>

namespace ftlab {

// Thrown when a computation fails numerically (Newton stalls, invariant
// monitors trip, cross-checks disagree).  Configuration and precondition
// problems use std::invalid_argument instead, so callers can map the two
// classes to distinct exit codes.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ftlab
