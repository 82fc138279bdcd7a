#pragma once

#include <stdexcept>
#include <string>

namespace patchy {

// Bad arguments or violated preconditions at an API boundary.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A semi-Lagrangian foot point left the first-neighbour cells of its base
// node, or the interpolation stencil degenerated (self weight reached 1).
class StencilError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The problem has f_min = 0, so no time step h = alpha*dx/f_min exists.
class DegenerateProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration hit its cap before reaching the requested tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace patchy
