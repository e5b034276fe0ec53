#pragma once

#include <stdexcept>
#include <string>

namespace brwlaw {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature did not reach the requested tolerance within its subdivision
/// budget. Carries the best estimate and its error bound.
class ToleranceError : public std::runtime_error {
 public:
  ToleranceError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// A root bracket could not be established. Indicates a bug for the
/// monotone special functions in this library.
class BracketError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OdeError : public std::runtime_error {
 public:
  OdeError(const std::string& what, double s, double psi, double step)
      : std::runtime_error(what), s_(s), psi_(psi), step_(step) {}

  double s() const noexcept { return s_; }
  double psi() const noexcept { return psi_; }
  double step() const noexcept { return step_; }

 private:
  double s_;
  double psi_;
  double step_;
};

class OrderTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Power series evaluated outside its radius of convergence.
class RadiusExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation exceeded its memory/atom budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A batch's accumulated discrepancy bound exceeds its declared budget.
class BudgetExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnderpoweredError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace brwlaw
