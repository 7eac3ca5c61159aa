#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: inconsistent dimensions, poles outside the disk, bad config.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at or too close to a singularity.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Data that violates a structural invariant (e.g. conjugate symmetry).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue failures, ill-conditioning, rank problems beyond tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap. Carries the last iterate.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what,
                            std::vector<double> best_iterate = {})
      : Error(what), best_iterate_(std::move(best_iterate)) {}

  const std::vector<double>& best_iterate() const { return best_iterate_; }

 private:
  std::vector<double> best_iterate_;
};

}  // namespace sls
