#pragma once

#include <stdexcept>
#include <string>

namespace rcpe {

/// Malformed configuration or arguments: a caller error, not a runtime event.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown at a specific step of a run (singular factorization,
/// condition estimate past the admissible limit).
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(long step, const std::string& what)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Non-finite values entered an estimator update or a model step.
class DivergenceSignal : public std::runtime_error {
 public:
  explicit DivergenceSignal(long step)
      : std::runtime_error("non-finite value at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Explicit time step rejected: dt is not below the stability bound.
class StabilityError : public std::runtime_error {
 public:
  StabilityError(double dt, double max_u, double bound)
      : std::runtime_error("time step " + std::to_string(dt) + " violates stability bound " +
                           std::to_string(bound) + " (max|u| = " + std::to_string(max_u) + ")"),
        dt_(dt),
        max_u_(max_u),
        bound_(bound) {}
  double dt() const noexcept { return dt_; }
  double max_u() const noexcept { return max_u_; }
  double bound() const noexcept { return bound_; }

 private:
  double dt_;
  double max_u_;
  double bound_;
};

/// A plant update hit a singular point of its dynamics.
class SingularDynamics : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcpe
