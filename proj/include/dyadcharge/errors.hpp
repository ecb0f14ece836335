#pragma once

#include <stdexcept>
#include <string>

namespace dyadcharge {

/// Bad input: out-of-range parameters, malformed data, violated preconditions.
/// The CLI maps these to exit status 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation could not complete (non-finite samples, failed factorization,
/// exhausted refinement depth). The CLI maps these to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteSample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DepthExceeded : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FactorizationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class YoungConditionViolated : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace dyadcharge
