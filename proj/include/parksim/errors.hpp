#pragma once

#include <stdexcept>
#include <string>

namespace parksim {

// Malformed or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that fails to parse or violates a documented invariant (exit status 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numerical breakdown (exit status 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two blocks with no connecting route in the requested mode.
class NoPathError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace parksim
