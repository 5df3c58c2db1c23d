#pragma once

#include <stdexcept>
#include <string>

namespace catspec {

// invalid input or configuration; the cli maps this to exit code 2
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// algorithmic failure (non-convergence, degenerate data); exit code 3
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace catspec
