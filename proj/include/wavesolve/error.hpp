#pragma once

#include <stdexcept>
#include <string>

namespace wavesolve {

// Base class for every error raised by the library. The subclasses mirror the
// failure categories callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad ranges, unknown names, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A point or argument outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong object state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wavesolve
