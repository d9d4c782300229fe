#pragma once

#include <stdexcept>
#include <string>

namespace cbstrat {

// Error taxonomy mirrors the CLI exit-code contract:
//   ConfigError -> 3, DataError -> 4, InvariantError -> 5.
// Usage errors (exit 2) are raised by the argument parser itself.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbstrat
