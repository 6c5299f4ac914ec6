#pragma once

#include <stdexcept>
#include <string>

namespace bmstab {

// Thrown when an operation's stated precondition is violated.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Thrown when an iterative solver exhausts its budget; carries the best
// residual reached so callers can report it.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual(best_residual) {}
  double best_residual;
};

}  // namespace bmstab
