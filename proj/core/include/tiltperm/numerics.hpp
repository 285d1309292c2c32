#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tiltperm/random.hpp"

namespace tiltperm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. Construction checks symmetry to 1e-12 relative to
/// the largest entry and stores the symmetrized average.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix identity(Eigen::Index n);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

EigenDecomposition sym_eigen(const SymMatrix& m);

struct RootAndLogDet {
  SymMatrix root;  // symmetric positive-definite square root
  double log_det;
};

/// Symmetric square root and log-determinant. Throws DegenerateDesign unless
/// the smallest eigenvalue exceeds 1e-12 times the largest.
RootAndLogDet sqrt_and_det(const SymMatrix& m);

/// log|m| for positive-definite m, same degeneracy rule as sqrt_and_det.
double log_det_pd(const SymMatrix& m);

/// P(chi^2_df >= x).
double chi_sq_survival(double x, int df);

/// Density of chi^2_df at x.
double chi_sq_density(double x, int df);

/// P(F_{d1,d2} >= f).
double f_survival(double f, int d1, int d2);

/// Surface area of the unit sphere in R^dim: 2 pi^{dim/2} / Gamma(dim/2).
double sphere_area(int dim);

/// n independent uniform points on the unit sphere in R^dim (normalized
/// standard normal vectors). dim = 1 yields signs.
std::vector<Vector> sphere_sample(int dim, std::size_t n, RngStream& rng);

/// Deterministic quadrature on the unit sphere in R^dim with weights summing
/// to sphere_area(dim). Product of Gauss-Gegenbauer rules in the polar angles.
struct SphereRule {
  std::vector<Vector> nodes;
  std::vector<double> weights;
};

/// points_per_angle Gauss nodes per polar angle; total nodes
/// 2 * points_per_angle^(dim-1). dim = 1 gives the two signs.
SphereRule spherical_product_rule(int dim, int points_per_angle);

}  // namespace tiltperm
