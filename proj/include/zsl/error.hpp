#pragma once

#include <stdexcept>
#include <string>

namespace zsl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong lifecycle state (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Batch normalization asked to compute statistics over fewer than two rows.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf encountered where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset content violates an invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Binary or text artifact is malformed, truncated or from another version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Hard-negative mining needs at least two candidate classes.
class MiningError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace zsl
