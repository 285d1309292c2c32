#pragma once

#include <optional>

#include "tiltperm/design.hpp"
#include "tiltperm/numerics.hpp"

namespace tiltperm {

/// A cumulant generating function evaluated jointly with its gradient and
/// Hessian at tilt t.
struct TiltPoint {
  Vector t;
  double kappa = 0.0;
  Vector grad;
  SymMatrix hess;  // empty when the dimension is zero
};

/// Anything whose Legendre transform we take: the permutation CGF of a
/// design, or an injected closed-form CGF (quadratic, linear images) used as
/// an oracle.
class CumulantModel {
 public:
  virtual ~CumulantModel() = default;
  virtual Eigen::Index dim() const = 0;
  virtual TiltPoint evaluate(const Vector& t) const = 0;
};

/// kappa(t) = (1/b) sum_i log( (1/k!) sum_{pi} exp(t' a_{i pi}) ), with a
/// per-block max shift so that no exponential overflows.
class PermutationCgf final : public CumulantModel {
 public:
  explicit PermutationCgf(const SortedDesign& design);

  Eigen::Index dim() const override { return k_ - 1; }
  TiltPoint evaluate(const Vector& t) const override;

  /// kappa alone; one pass over blocks x permutations.
  double value(const Vector& t) const;

 private:
  std::vector<double> rows_;  // sorted rows, row-major
  Eigen::Index blocks_;
  int k_;
  const PermutationSet* perms_;
  double log_count_;
};

/// Convenience wrapper: one evaluation of the permutation CGF.
TiltPoint kappa_eval(const SortedDesign& d, const Vector& t);

/// kappa(t) = t' S t / 2. Its Legendre transform is x' S^{-1} x / 2 and the
/// saddlepoint tail formulas reduce to chi-square tails exactly.
class QuadraticCgf final : public CumulantModel {
 public:
  explicit QuadraticCgf(SymMatrix covariance) : cov_(std::move(covariance)) {}
  Eigen::Index dim() const override { return cov_.dim(); }
  TiltPoint evaluate(const Vector& t) const override;
  const SymMatrix& covariance() const noexcept { return cov_; }

 private:
  SymMatrix cov_;
};

/// Which contiguous run of sorted columns a restricted CGF permutes:
/// lower(l) = columns 1..l, upper(l) = columns l+1..k.
enum class BlockSide { lower, upper };

/// A contiguous run of sorted columns taken out of a design: the run,
/// re-centered row by row, plus the mean that was removed (the average over
/// blocks of the row means of the run).
struct RestrictedBlock {
  int size = 0;                        // number of columns in the run
  std::optional<SortedDesign> design;  // absent when size < 2
  double shift = 0.0;
};

RestrictedBlock restricted_block(const SortedDesign& d, BlockSide side, int l);

/// The sub-CGF over permutations of one run of columns, with each block's
/// run re-centered: (1/b) sum_i log( (1/m!) sum_pi exp(sum_j c_{i pi(j)} u_j) )
/// where c is the run minus its row mean. The CGF of the raw entries is this
/// plus shift * sum(u). Dimension is size - 1; the dimension-0 case is
/// identically zero.
TiltPoint restricted_kappa(const SortedDesign& d, BlockSide side, int l, const Vector& u);

}  // namespace tiltperm
