#pragma once

#include <stdexcept>
#include <string>

namespace fieldtn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (non-square, mismatched bond dimensions).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input records that fail validation (catalog parameters, orthonormality).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported JSON.
class SerializationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical routine could not reach the requested accuracy.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A dense construction would exceed the configured size guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fieldtn
