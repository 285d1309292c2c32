#include "tiltperm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tiltperm/errors.hpp"

namespace tiltperm {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw ContractViolation("SymMatrix: matrix must be square with dimension >= 1");
  }
  const double scale = m_.cwiseAbs().maxCoeff();
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12 * scale)) {
    throw ContractViolation("SymMatrix: matrix is not symmetric (max |m - m^T| = " +
                            std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }

EigenDecomposition sym_eigen(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalDegeneracy("sym_eigen: eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

void require_positive_definite(const Vector& values, const char* who) {
  const double hi = values.maxCoeff();
  const double lo = values.minCoeff();
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
    throw DegenerateDesign(std::string(who) +
                           ": matrix is not positive definite (eigenvalue range [" +
                           std::to_string(lo) + ", " + std::to_string(hi) +
                           "]); the design is degenerate (constant or tied data?)");
  }
}

}  // namespace

RootAndLogDet sqrt_and_det(const SymMatrix& m) {
  const auto eig = sym_eigen(m);
  require_positive_definite(eig.values, "sqrt_and_det");
  const Vector roots = eig.values.array().sqrt();
  Matrix root = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  root = 0.5 * (root + root.transpose()).eval();
  return {SymMatrix(std::move(root)), eig.values.array().log().sum()};
}

double log_det_pd(const SymMatrix& m) {
  const auto eig = sym_eigen(m);
  require_positive_definite(eig.values, "log_det_pd");
  return eig.values.array().log().sum();
}

double chi_sq_survival(double x, int df) {
  if (df < 1) throw ValidationError("chi_sq_survival: df must be a positive integer");
  if (!(x >= 0.0)) throw ValidationError("chi_sq_survival: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi_sq_density(double x, int df) {
  if (df < 1) throw ValidationError("chi_sq_density: df must be a positive integer");
  if (!(x >= 0.0)) throw ValidationError("chi_sq_density: x must be non-negative");
  if (std::isinf(x)) return 0.0;
  if (x == 0.0) {
    if (df == 1) return std::numeric_limits<double>::infinity();
    return df == 2 ? 0.5 : 0.0;
  }
  return boost::math::pdf(boost::math::chi_squared_distribution<double>(df), x);
}

double f_survival(double f, int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw ValidationError("f_survival: degrees of freedom must be positive");
  if (!(f >= 0.0)) throw ValidationError("f_survival: f must be non-negative");
  if (f == 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F >= f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2); this form keeps tail accuracy.
  const double y = d2 / (d2 + d1 * f);
  return boost::math::ibeta(0.5 * d2, 0.5 * d1, y);
}

double sphere_area(int dim) {
  if (dim < 1) throw ValidationError("sphere_area: dimension must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

std::vector<Vector> sphere_sample(int dim, std::size_t n, RngStream& rng) {
  if (dim < 1) throw ValidationError("sphere_sample: dimension must be >= 1");
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    double norm2 = 0.0;
    do {
      for (int j = 0; j < dim; ++j) v[j] = rng.normal();
      norm2 = v.squaredNorm();
    } while (norm2 == 0.0);
    out.push_back(v / std::sqrt(norm2));
  }
  return out;
}

namespace {

// Gauss rule for weight (1 - x^2)^a on [-1, 1], a = lambda - 1/2, by
// Golub-Welsch on the orthonormal Gegenbauer recurrence.
void gegenbauer_rule(double a, int n, std::vector<double>& nodes, std::vector<double>& weights) {
  const double lambda = a + 0.5;
  Matrix jacobi = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double m = i;
    const double beta2 = (i == 1) ? 1.0 / (2.0 * (1.0 + lambda))
                                  : m * (m + 2.0 * lambda - 1.0) /
                                        (4.0 * (m + lambda) * (m + lambda - 1.0));
    jacobi(i - 1, i) = jacobi(i, i - 1) = std::sqrt(beta2);
  }
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(a + 1.0) / std::tgamma(a + 1.5);
  nodes.resize(n);
  weights.resize(n);
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = mu0;
    return;
  }
  const auto eig = sym_eigen(SymMatrix(jacobi));
  for (int i = 0; i < n; ++i) {
    nodes[i] = eig.values[i];
    weights[i] = mu0 * eig.vectors(0, i) * eig.vectors(0, i);
  }
}

}  // namespace

SphereRule spherical_product_rule(int dim, int points_per_angle) {
  if (dim < 1) throw ValidationError("spherical_product_rule: dimension must be >= 1");
  if (points_per_angle < 1) throw ValidationError("spherical_product_rule: need >= 1 point");
  SphereRule rule;
  rule.nodes = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  rule.weights = {1.0, 1.0};
  std::vector<double> xs, ws;
  for (int d = 2; d <= dim; ++d) {
    gegenbauer_rule(0.5 * (d - 3), points_per_angle, xs, ws);
    SphereRule next;
    next.nodes.reserve(rule.nodes.size() * xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double sine = std::sqrt(std::max(0.0, 1.0 - xs[i] * xs[i]));
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        Vector node(d);
        node[0] = xs[i];
        node.tail(d - 1) = sine * rule.nodes[j];
        next.nodes.push_back(std::move(node));
        next.weights.push_back(ws[i] * rule.weights[j]);
      }
    }
    rule = std::move(next);
  }
  return rule;
}

}  // namespace tiltperm
