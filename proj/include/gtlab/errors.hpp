#pragma once

#include <stdexcept>
#include <string>

namespace gtlab {

/// Input violates a documented precondition (bad parameter, grid mismatch,
/// unsupported profile shape). The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation could not produce a result: NaN in a trajectory, no root in
/// the search interval, too few points for a fit. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gtlab
