#pragma once

#include <stdexcept>
#include <string>

namespace orbitlab {

/// Base of all library errors. Precondition violations on arguments use
/// std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, region file, or CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The enumerator hit its element-count ceiling.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Iteration caps, singular factorizations and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature did not reach the requested tolerance. Carries the
/// best estimate obtained before giving up.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double partial_value, double partial_error)
      : Error(what), partial_value_(partial_value), partial_error_(partial_error) {}

  double partial_value() const noexcept { return partial_value_; }
  double partial_error() const noexcept { return partial_error_; }

 private:
  double partial_value_;
  double partial_error_;
};

/// A Monte Carlo estimator could not meet its error target within budget.
class SampleBudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace orbitlab
