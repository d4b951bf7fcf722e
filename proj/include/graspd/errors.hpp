#pragma once

#include <stdexcept>
#include <string>

namespace graspd {

// Bad inputs: malformed files, violated preconditions, invalid arguments.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / serialization failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, diverged simulations, failed numerical checks.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what, long step = -1)
      : std::runtime_error(what), step_index(step) {}
  long step_index;  // step at which divergence was detected, -1 if n/a
};

}  // namespace graspd
