#pragma once

#include <stdexcept>
#include <string>

namespace gridwalk {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A mathematical-domain violation (e.g. saddle inversion outside |u|_1 < 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An object was queried in a state where the operation is undefined.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A requested computation would exceed a configured resource budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Iteration failed to converge or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A probability distribution had a zero entry where positivity is required.
class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

/// A binary or text artifact has the wrong magic/version/shape.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A binary artifact is truncated or fails integrity validation.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration is invalid (unknown key, bad value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A requested run artifact does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridwalk
