#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lifshitz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. a coupling
/// outside [lambda_minus, lambda_plus]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An operation was requested before the state it depends on exists.
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A configuration violates a hypothesis an operation relies on.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, std::vector<std::string> violated)
      : Error(what), violated_(std::move(violated)) {}
  const std::vector<std::string>& violated() const noexcept { return violated_; }

 private:
  std::vector<std::string> violated_;
};

/// Iterative eigensolver gave up. Carries the best eigenvalue estimates.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_values,
                   std::vector<double> best_residuals)
      : Error(what),
        best_values_(std::move(best_values)),
        best_residuals_(std::move(best_residuals)) {}
  const std::vector<double>& best_values() const noexcept { return best_values_; }
  const std::vector<double>& best_residuals() const noexcept { return best_residuals_; }

 private:
  std::vector<double> best_values_;
  std::vector<double> best_residuals_;
};

/// Too few admissible points for a regression.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace lifshitz
