#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace tiltperm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract user input (bad matrix shape, negative
/// arguments to a survival function, unparsable CSV).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// CSV ingestion failure with the offending location (1-based; column 0 when
/// the whole row is at fault).
class ParseError : public ValidationError {
 public:
  ParseError(std::string message, long row, long column)
      : ValidationError(std::move(message)), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

/// A request that would exceed desk-scale enumeration limits.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// The design (or a matrix derived from it) is singular: constant rows,
/// a zero residual sum of squares, a non-positive-definite covariance.
class DegenerateDesign : public Error {
 public:
  using Error::Error;
};

/// A point handed to the saddlepoint solver is not in the open admissible
/// domain. Boundary points must go through the boundary decomposition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The Newton iteration hit its cap; the point is numerically on the boundary.
class NearBoundary : public Error {
 public:
  NearBoundary(std::string message, Eigen::VectorXd best_tilt, double residual)
      : Error(std::move(message)), best_tilt_(std::move(best_tilt)), residual_(residual) {}
  const Eigen::VectorXd& best_tilt() const noexcept { return best_tilt_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd best_tilt_;
  double residual_;
};

/// Requested level u^2/2 is too close to log k: the level set would touch the
/// boundary of the admissible domain.
class LevelSetEscapesDomain : public Error {
 public:
  using Error::Error;
};

/// A quantity that must be bounded away from zero is not (signals a solver
/// failure rather than bad input).
class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tiltperm
