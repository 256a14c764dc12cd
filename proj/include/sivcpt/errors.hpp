#pragma once

#include <stdexcept>
#include <string>

namespace sivcpt {

// Invalid argument outside an operation's domain (T <= 0, negative linewidth, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double failure_time)
      : NumericalError(what), failure_time_(failure_time) {}
  double failure_time() const { return failure_time_; }

 private:
  double failure_time_;
};

class NonUniqueSteadyState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoDipDetected : public FitError {
 public:
  using FitError::FitError;
};

class NoTransientDetected : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Lifetime requested for a model whose total rate vanishes.
class InfiniteLifetime : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sivcpt
