#pragma once

#include <stdexcept>
#include <string>

namespace dictnet {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform (matmul, solve, layer wiring, ...).
struct ShapeError : Error {
  using Error::Error;
};

/// A numeric kernel produced NaN/Inf. Training converts this into
/// DivergenceError; outside training it signals invalid inputs.
struct NumericError : Error {
  using Error::Error;
};

/// Cholesky hit a non-positive pivot: the matrix is not positive definite
/// (usually the ridge term lambda is too small or the kernel is invalid).
struct NotSpdError : Error {
  using Error::Error;
};

/// A coordinate or index is outside its domain.
struct IndexError : Error {
  using Error::Error;
};

/// Invalid configuration: bad field values, missing/forbidden context,
/// degenerate fractions, infeasible strategy parameters.
struct ConfigError : Error {
  using Error::Error;
};

/// A file did not match its declared format; message carries the byte offset.
struct FormatError : Error {
  using Error::Error;
};

/// Not enough data to perform the operation (e.g. covariance of one sample).
struct DataError : Error {
  using Error::Error;
};

/// Optimization produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

/// An operation was called in an invalid order (e.g. backward before forward).
struct StateError : Error {
  using Error::Error;
};

}  // namespace dictnet
