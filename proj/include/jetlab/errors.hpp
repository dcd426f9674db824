#pragma once

#include <stdexcept>
#include <string>

namespace jetlab {

// Malformed or out-of-range input data: non-finite entries, dimension
// mismatches, nodes outside the grid.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Coefficient field violates its documented sign or shape constraints
// (e.g. a right-hand side that must be nonnegative).
class InvalidCoefficient : public InvalidInput {
 public:
  explicit InvalidCoefficient(const std::string& msg) : InvalidInput(msg) {}
};

// A probe along a segment found no membership sign change to bracket.
class FiberDegenerate : public std::runtime_error {
 public:
  explicit FiberDegenerate(const std::string& msg) : std::runtime_error(msg) {}
};

// The requested check has no meaningful answer for this input
// (e.g. interior-based checks against a cone with empty interior).
class Unsupported : public std::runtime_error {
 public:
  explicit Unsupported(const std::string& msg) : std::runtime_error(msg) {}
};

// A check was invoked on inputs that fail its stated preconditions; this is
// distinct from the check itself failing.
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Iterative solver detected divergence for the supplied data.
class NotAdmissibleData : public std::runtime_error {
 public:
  explicit NotAdmissibleData(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace jetlab
