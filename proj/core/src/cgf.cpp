#include "tiltperm/cgf.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tiltperm/errors.hpp"

namespace tiltperm {

PermutationCgf::PermutationCgf(const SortedDesign& design)
    : blocks_(design.blocks()),
      k_(static_cast<int>(design.treatments())),
      perms_(&cached_permutations(k_)),
      log_count_(std::lgamma(k_ + 1.0)) {
  rows_.resize(static_cast<std::size_t>(blocks_ * k_));
  for (Eigen::Index i = 0; i < blocks_; ++i) {
    for (int j = 0; j < k_; ++j) rows_[static_cast<std::size_t>(i * k_ + j)] = design.a()(i, j);
  }
}

double PermutationCgf::value(const Vector& t) const {
  if (t.size() != dim()) throw ContractViolation("PermutationCgf: tilt has wrong dimension");
  if (!t.allFinite()) throw ContractViolation("PermutationCgf: tilt must be finite");
  const std::size_t n = perms_->size();
  const int d = k_ - 1;
  thread_local std::vector<double> scores;
  scores.resize(n);
  double kappa = 0.0;
  for (Eigen::Index i = 0; i < blocks_; ++i) {
    const double* row = rows_.data() + i * k_;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n; ++p) {
      const auto idx = perms_->full(p);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += t[j] * row[idx[j]];
      scores[p] = s;
      top = std::max(top, s);
    }
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) total += std::exp(scores[p] - top);
    kappa += top + std::log(total) - log_count_;
  }
  return kappa / static_cast<double>(blocks_);
}

TiltPoint PermutationCgf::evaluate(const Vector& t) const {
  if (t.size() != dim()) throw ContractViolation("PermutationCgf: tilt has wrong dimension");
  if (!t.allFinite()) throw ContractViolation("PermutationCgf: tilt must be finite");
  const std::size_t n = perms_->size();
  const int d = k_ - 1;
  thread_local std::vector<double> weights;
  weights.resize(n);

  double kappa = 0.0;
  Vector grad = Vector::Zero(d);
  Matrix hess = Matrix::Zero(d, d);
  double mean[kMaxTreatments];
  double diff[kMaxTreatments];

  for (Eigen::Index i = 0; i < blocks_; ++i) {
    const double* row = rows_.data() + i * k_;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n; ++p) {
      const auto idx = perms_->full(p);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += t[j] * row[idx[j]];
      weights[p] = s;
      top = std::max(top, s);
    }
    double total = 0.0;
    for (int j = 0; j < d; ++j) mean[j] = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double w = std::exp(weights[p] - top);
      weights[p] = w;
      total += w;
      const auto idx = perms_->full(p);
      for (int j = 0; j < d; ++j) mean[j] += w * row[idx[j]];
    }
    for (int j = 0; j < d; ++j) mean[j] /= total;

    // Centered second moments; the tilted covariance of one block.
    for (std::size_t p = 0; p < n; ++p) {
      const double w = weights[p] / total;
      const auto idx = perms_->full(p);
      for (int j = 0; j < d; ++j) diff[j] = row[idx[j]] - mean[j];
      for (int j = 0; j < d; ++j) {
        const double wj = w * diff[j];
        for (int m = j; m < d; ++m) hess(j, m) += wj * diff[m];
      }
    }
    kappa += top + std::log(total) - log_count_;
    for (int j = 0; j < d; ++j) grad[j] += mean[j];
  }

  const double inv_b = 1.0 / static_cast<double>(blocks_);
  for (int j = 0; j < d; ++j) {
    for (int m = j; m < d; ++m) {
      hess(j, m) *= inv_b;
      hess(m, j) = hess(j, m);
    }
  }
  return {t, kappa * inv_b, grad * inv_b, SymMatrix(std::move(hess))};
}

TiltPoint kappa_eval(const SortedDesign& d, const Vector& t) {
  return PermutationCgf(d).evaluate(t);
}

TiltPoint QuadraticCgf::evaluate(const Vector& t) const {
  if (t.size() != dim()) throw ContractViolation("QuadraticCgf: tilt has wrong dimension");
  const Vector g = cov_.matrix() * t;
  return {t, 0.5 * t.dot(g), g, cov_};
}

RestrictedBlock restricted_block(const SortedDesign& d, BlockSide side, int l) {
  const int k = static_cast<int>(d.treatments());
  if (l < 1 || l > k - 1) {
    throw ContractViolation("restricted_block: l must lie in 1..k-1");
  }
  const int first = side == BlockSide::lower ? 0 : l;
  const int size = side == BlockSide::lower ? l : k - l;
  const Matrix run = d.a().middleCols(first, size);
  RestrictedBlock block;
  block.size = size;
  block.shift = run.mean();
  if (size >= 2) block.design = SortedDesign::from_sorted_rows(run);
  return block;
}

TiltPoint restricted_kappa(const SortedDesign& d, BlockSide side, int l, const Vector& u) {
  const auto block = restricted_block(d, side, l);
  if (u.size() != block.size - 1) {
    throw ContractViolation("restricted_kappa: tilt has wrong dimension");
  }
  if (!block.design) return {u, 0.0, Vector(), SymMatrix()};
  return PermutationCgf(*block.design).evaluate(u);
}

}  // namespace tiltperm
