#pragma once

#include <stdexcept>
#include <string>

namespace panelmix {

// Rejected input: bad dimensions, malformed files, invalid configuration.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-SPD precision, unconverged enumeration, zero support.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace panelmix
