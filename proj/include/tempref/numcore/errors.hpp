#pragma once

#include <stdexcept>
#include <string>

namespace tempref {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not satisfy an operation's contract.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of the function (log of 0, temperature <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Class label or position out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tempref
