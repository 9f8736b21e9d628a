#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlsobs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sizes, geometries or time grids that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition (e.g. a low-band initial state).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Base for failures of the numerics themselves; the CLI maps these to exit 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, std::size_t step)
      : NumericalError(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ObservabilityError : public NumericalError {
 public:
  ObservabilityError(const std::string& what, double lambda_min)
      : NumericalError(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlsobs
