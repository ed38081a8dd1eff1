#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace htopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function evaluation inside a finite-difference stencil was not finite.
class DifferentiationError : public Error {
 public:
  DifferentiationError(const std::string& what, std::ptrdiff_t coordinate)
      : Error(what), coordinate_(coordinate) {}
  std::ptrdiff_t coordinate() const { return coordinate_; }

 private:
  std::ptrdiff_t coordinate_;
};

/// Power iteration did not reach the requested residual.
class EigenEstimationError : public Error {
 public:
  EigenEstimationError(const std::string& what, Eigen::VectorXd last_iterate, double last_estimate)
      : Error(what), last_iterate_(std::move(last_iterate)), last_estimate_(last_estimate) {}
  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  double last_estimate() const { return last_estimate_; }

 private:
  Eigen::VectorXd last_iterate_;
  double last_estimate_;
};

class ProblemError : public Error {
 public:
  using Error::Error;
};

class ImplicitSolveError : public Error {
 public:
  using Error::Error;
};

class ReductionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The tuner produced a non-finite loss or gradient. Carries the offending iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Eigen::VectorXd iterate)
      : Error(what), iterate_(std::move(iterate)) {}
  const Eigen::VectorXd& iterate() const { return iterate_; }

 private:
  Eigen::VectorXd iterate_;
};

/// An internal guarantee (e.g. box feasibility under ht2) failed.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace htopt
