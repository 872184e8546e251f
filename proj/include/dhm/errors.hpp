#pragma once

#include <stdexcept>
#include <string>

namespace dhm {

/// Invalid arguments to a constructor or operation (bad dimensions, shapes, periods).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closest-point projection onto the target is undefined at the given point.
class SingularProjection : public std::runtime_error {
 public:
  explicit SingularProjection(const std::string& what, long node = -1)
      : std::runtime_error(node < 0 ? what : what + " (node " + std::to_string(node) + ")"),
        node_(node) {}
  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// A point that should lie on the target is further away than the target tolerance.
class OffManifold : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quantity that must be real (or well conditioned) is not.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dhm
