#pragma once

#include <stdexcept>
#include <string>

namespace penstop {

/// Base of all library errors. Standard argument/range errors are thrown as
/// std::invalid_argument / std::out_of_range.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-convergence, monotonicity violation or another numerical failure
/// (maps to CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system failure while reading or writing artifacts (CLI exit code 1).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Instance too large for an exhaustive oracle.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace penstop
