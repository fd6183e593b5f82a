#pragma once

#include <stdexcept>
#include <string>

namespace adaalter {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of an operation (e.g. sqrt of a nonpositive radicand).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (empty inputs, bad ids, violated hypotheses).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Configuration text could not be parsed or failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Internal state broke an invariant that should be impossible for valid inputs.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaalter
