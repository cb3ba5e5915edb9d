#pragma once

#include <stdexcept>
#include <string>

namespace webqa {

// Bad input data: malformed files, missing entities, insufficient training data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's contract (bad argument, unknown relation...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace webqa
