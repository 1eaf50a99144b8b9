#pragma once

#include <stdexcept>
#include <string>

namespace alle {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files (CSV, IDX, metric checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: unreadable inputs, unwritable outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, indefinite matrices, degenerate neighborhoods, failed eigensolves.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace alle
