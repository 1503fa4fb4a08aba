#pragma once

#include <stdexcept>

namespace cemb {

// Caller misuse: bad call sequence or malformed arguments. CLI exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimension mismatch.
struct ShapeError : UsageError {
  using UsageError::UsageError;
};

// Hyperparameter or flag outside its legal range.
struct ParameterError : UsageError {
  using UsageError::UsageError;
};

// Math domain violation (log of a nonpositive value, zero-norm cosine).
struct DomainError : UsageError {
  using UsageError::UsageError;
};

// Malformed input file. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered, or training diverged. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cemb
