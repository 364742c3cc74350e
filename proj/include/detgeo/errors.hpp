#pragma once

#include <stdexcept>
#include <string>

namespace detgeo {

// Malformed or out-of-contract input. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal invariant (exit code 3).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Gradient requested at a configuration where the metric is not differentiable.
class NonDifferentiableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace detgeo
