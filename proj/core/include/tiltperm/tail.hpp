#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include "tiltperm/cgf.hpp"
#include "tiltperm/lambda.hpp"
#include "tiltperm/numerics.hpp"
#include "tiltperm/random.hpp"

namespace tiltperm {

/// The ingredients the tail formulas need from a cumulant model: its
/// curvature at the origin, the conjugate solver, and how far rays may go.
class LevelSetProblem {
 public:
  virtual ~LevelSetProblem() = default;

  virtual int dim() const = 0;             // k - 1
  virtual double blocks() const = 0;       // b
  int treatments() const { return dim() + 1; }

  virtual const SymMatrix& origin_hessian() const = 0;  // kappa''(0)
  virtual const SymMatrix& origin_root() const = 0;     // kappa''(0)^{1/2}
  virtual double origin_log_det() const = 0;            // log |kappa''(0)|

  /// Largest r with r * direction inside the domain (infinity if unbounded).
  virtual double ray_radius(const Vector& direction) const = 0;

  /// Supremum of admissible levels u^2/2 (log k for designs).
  virtual double level_ceiling() const = 0;

  virtual SaddlepointSolution solve(const Vector& x, const Vector* warm) const = 0;
};

/// The permutation CGF of one sorted design.
class DesignLevelSet final : public LevelSetProblem {
 public:
  explicit DesignLevelSet(const SortedDesign& design, SolverOptions options = {});

  int dim() const override { return static_cast<int>(solver_.treatments()) - 1; }
  double blocks() const override { return static_cast<double>(solver_.design().blocks()); }
  const SymMatrix& origin_hessian() const override { return hess0_; }
  const SymMatrix& origin_root() const override { return root_; }
  double origin_log_det() const override { return log_det_; }
  double ray_radius(const Vector& direction) const override;
  double level_ceiling() const override;
  SaddlepointSolution solve(const Vector& x, const Vector* warm) const override;

  const LambdaSolver& solver() const noexcept { return solver_; }

 private:
  LambdaSolver solver_;
  SolverOptions options_;
  SymMatrix hess0_;
  SymMatrix root_;
  double log_det_;
};

/// kappa(t) = t' S t / 2 with an unbounded domain: the Gaussian reference
/// case in which every tail formula collapses to a chi-square tail.
class GaussianLevelSet final : public LevelSetProblem {
 public:
  GaussianLevelSet(SymMatrix covariance, double blocks);

  int dim() const override { return static_cast<int>(cgf_.dim()); }
  double blocks() const override { return blocks_; }
  const SymMatrix& origin_hessian() const override { return cgf_.covariance(); }
  const SymMatrix& origin_root() const override { return root_; }
  double origin_log_det() const override { return log_det_; }
  double ray_radius(const Vector& direction) const override;
  double level_ceiling() const override;
  SaddlepointSolution solve(const Vector& x, const Vector* warm) const override;

 private:
  QuadraticCgf cgf_;
  double blocks_;
  SymMatrix root_;
  double log_det_;
};

constexpr double kDefaultEpsilon = 1e-3;

/// Throws LevelSetEscapesDomain unless 0 < u and u^2/2 < ceiling - epsilon.
void check_admissible(const LevelSetProblem& p, double u, double epsilon = kDefaultEpsilon);

/// Largest admissible u: sqrt(2 (ceiling - epsilon)).
double max_admissible_u(const LevelSetProblem& p, double epsilon = kDefaultEpsilon);

struct RadialSolution {
  Vector s;  // unit direction
  double r = 0.0;
  Vector t_x;
  SaddlepointSolution solution;
};

/// Solves Lambda(r kappa''(0)^{1/2} s) = u^2/2 for r in (0, ray radius) to
/// within 1e-9.
RadialSolution radial_root(const LevelSetProblem& p, const Vector& s, double u,
                           double epsilon = kDefaultEpsilon);

/// The level-set integrand; strictly positive.
double delta(const LevelSetProblem& p, const RadialSolution& sol, double u);

struct GEstimate {
  double g = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
};

/// Sphere integral of delta under unnormalized surface measure, estimated by
/// uniform directions: area * mean. One dimension uses the exact two-point
/// sum. Directions are solved independently on up to `threads` workers.
GEstimate big_g(const LevelSetProblem& p, double u, std::size_t n_samples, RngStream& rng,
                double epsilon = kDefaultEpsilon, unsigned threads = 1);

/// Same integral with a deterministic product rule (standard error 0).
GEstimate big_g_rule(const LevelSetProblem& p, double u, int points_per_angle,
                     double epsilon = kDefaultEpsilon);

/// c_b = b^{(k-1)/2} / (2^{(k-3)/2} Gamma((k-1)/2)).
double tail_constant(double b, int k);

/// Q_{k-1}(b u^2) + (c_b / b) u^{k-3} exp(-b u^2 / 2) (G - 1), not clamped.
double tail_lr_unclamped(double b, int k, double u, double g);

/// tail_lr_unclamped clamped to [0, 1].
double tail_lr(double b, int k, double u, double g);

/// u - log(G) / (b u). Throws DomainError for g <= 0.
double adjusted_u(double b, double u, double g);

/// Q_{k-1}(b u*^2), and 1 when u* <= 0.
double tail_bn(double b, int k, double u, double g);

struct TailOptions {
  double epsilon = kDefaultEpsilon;
  std::size_t sphere_samples = 100;
  bool quadrature = false;  // deterministic rule instead of Monte Carlo
  int rule_points = 24;     // per polar angle
  unsigned threads = 1;
};

struct TailApproximation {
  double u = 0.0;
  double g = 0.0;
  double g_se = 0.0;
  double u_star = 0.0;
  double p_lr = 0.0;
  double p_bn = 0.0;
  double se_lr = 0.0;
  double se_bn = 0.0;
  std::size_t n_quadrature = 0;
  bool lr_clamped = false;
};

TailApproximation approximate_tail(const LevelSetProblem& p, double u, const TailOptions& options,
                                   RngStream& rng);

/// Assembles both probabilities from a G estimate.
TailApproximation assemble_tail(double b, int k, double u, const GEstimate& g);

}  // namespace tiltperm
