#pragma once

#include <stdexcept>
#include <string>

namespace conan {

/// Bad user input: malformed files, shape mismatches, violated preconditions.
/// The CLI maps this to exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure inside a solver (non-finite iterates and the like).
/// The CLI maps this to exit code 2.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace conan
