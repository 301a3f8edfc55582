#pragma once

#include <stdexcept>
#include <string>

namespace ksgraph {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent shapes, unknown axes, mismatched dimensions.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A size product does not fit in the integer type used for indexing,
// or a dense routine was asked to handle more than it is allowed to.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Requested rank is larger than the data can support.
class RankError : public Error {
 public:
  using Error::Error;
};

// An iterative linear-algebra routine failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_gradient_norm)
      : Error(what), last_gradient_norm_(last_gradient_norm) {}

  double last_gradient_norm() const noexcept { return last_gradient_norm_; }

 private:
  double last_gradient_norm_;
};

// The variance hypothesis cannot be expressed in identifiable coordinates.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// Problems reading manifests or data files.
class IngestError : public Error {
 public:
  using Error::Error;
};

}  // namespace ksgraph
