#pragma once

#include <stdexcept>
#include <string>

namespace smuciv {

// Base class for everything the engine throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failures, singular matrices, non-finite quantities.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised by the truncated inverse-gamma step when the scale is exactly zero.
class DegenerateScaleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Invalid configuration, spec or parameter values supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File system and parsing problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace smuciv
