#pragma once

#include <stdexcept>
#include <string>

namespace rigidity {

/// Invalid caller input (non-finite values, bad step sizes, empty windows).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point outside the domain of a metric chart.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Distance solver exhausted all candidates.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// The finite window of a point set does not reach the requested radius.
class InsufficientWindowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical method's precondition failed at run time (e.g. a conjugate
/// point inside the polar Jacobi integration range).
class MethodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distance data that is not a metric.
class InvalidMetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rigidity
