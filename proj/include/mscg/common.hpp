#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace mscg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Single exception type used across the library; messages start with a short
// error tag ("unknown node: ...", "infinite bound: ...").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a model is proven infeasible in a context where the caller
// cannot continue (e.g. a pricing problem with an empty feasible set).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace mscg
