#pragma once

#include <stdexcept>
#include <string>

namespace phsurgery {

/// Invalid parameters or preconditions (bad dimensions, infeasible rates, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory left the unit disk before the requested time.
class EscapeError : public std::runtime_error {
 public:
  EscapeError(const std::string& what, double escape_time)
      : std::runtime_error(what), escape_time_(escape_time) {}
  double escape_time() const { return escape_time_; }

 private:
  double escape_time_;
};

/// Numerical breakdown (non-finite state, degenerate path, quadrature failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phsurgery
