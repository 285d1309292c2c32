#include "tiltperm/tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tiltperm/errors.hpp"
#include "tiltperm/parallel.hpp"

namespace tiltperm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SymMatrix origin_hessian_of(const SortedDesign& d) {
  return kappa_eval(d, Vector::Zero(static_cast<Eigen::Index>(d.treatments()) - 1)).hess;
}

}  // namespace

DesignLevelSet::DesignLevelSet(const SortedDesign& design, SolverOptions options)
    : solver_(design, options), options_(options), hess0_(origin_hessian_of(design)) {
  auto rd = sqrt_and_det(hess0_);
  root_ = std::move(rd.root);
  log_det_ = rd.log_det;
}

double DesignLevelSet::ray_radius(const Vector& direction) const {
  return solver_.ray_radius(direction);
}

double DesignLevelSet::level_ceiling() const { return std::log(static_cast<double>(treatments())); }

SaddlepointSolution DesignLevelSet::solve(const Vector& x, const Vector* warm) const {
  return maximize_conjugate(solver_.cgf(), x, warm, options_);
}

GaussianLevelSet::GaussianLevelSet(SymMatrix covariance, double blocks)
    : cgf_(std::move(covariance)), blocks_(blocks) {
  if (!(blocks > 0.0)) throw ContractViolation("GaussianLevelSet: blocks must be positive");
  auto rd = sqrt_and_det(cgf_.covariance());
  root_ = std::move(rd.root);
  log_det_ = rd.log_det;
}

double GaussianLevelSet::ray_radius(const Vector&) const { return kInf; }

double GaussianLevelSet::level_ceiling() const { return kInf; }

SaddlepointSolution GaussianLevelSet::solve(const Vector& x, const Vector* warm) const {
  return maximize_conjugate(cgf_, x, warm);
}

double max_admissible_u(const LevelSetProblem& p, double epsilon) {
  const double ceiling = p.level_ceiling();
  if (!std::isfinite(ceiling)) return kInf;
  return std::sqrt(std::max(0.0, 2.0 * (ceiling - epsilon)));
}

void check_admissible(const LevelSetProblem& p, double u, double epsilon) {
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw LevelSetEscapesDomain("threshold u must be positive and finite");
  }
  if (epsilon < 0.0) throw ContractViolation("epsilon must be non-negative");
  const double ceiling = p.level_ceiling();
  if (!std::isfinite(ceiling)) return;
  if (0.5 * u * u >= ceiling - epsilon) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "u = " << u << " is outside the admissible range for k = " << p.treatments()
        << ": the level set u^2/2 must stay below log k - epsilon, i.e. u < "
        << max_admissible_u(p, epsilon) << " (sqrt(2 log " << p.treatments()
        << ") = " << std::sqrt(2.0 * ceiling) << ", epsilon = " << epsilon << ")";
    throw LevelSetEscapesDomain(msg.str());
  }
}

RadialSolution radial_root(const LevelSetProblem& p, const Vector& s, double u, double epsilon) {
  check_admissible(p, u, epsilon);
  if (s.size() != p.dim()) throw ContractViolation("radial_root: direction has wrong dimension");
  if (std::abs(s.norm() - 1.0) > 1e-10) throw ContractViolation("radial_root: s must be a unit vector");

  const Matrix& root = p.origin_root().matrix();
  const Vector ms = root * s;
  const double target = 0.5 * u * u;
  const double goal = 1e-12 * std::max(1.0, target);
  const double accept = 1e-9;

  double lo = 0.0;
  double hi = p.ray_radius(ms);
  // Exact for the quadratic case: r = u, t = u kappa''(0)^{-1/2} s.
  const Vector unit_tilt = root.llt().solve(s);
  double r = (u < hi) ? u : 0.5 * hi;
  Vector warm = r * unit_tilt;

  std::optional<SaddlepointSolution> best;
  double best_err = kInf;
  double best_r = r;
  for (int it = 0; it < 200; ++it) {
    const Vector x = r * ms;
    SaddlepointSolution sol;
    try {
      sol = p.solve(x, &warm);
    } catch (const NearBoundary&) {
      hi = r;
      const double next = 0.5 * (lo + hi);
      warm = (next / r) * warm;
      r = next;
      continue;
    }
    const double f = sol.lambda - target;
    if (std::abs(f) < best_err) {
      best_err = std::abs(f);
      best_r = r;
      best = sol;
    }
    if (std::abs(f) <= goal) break;
    if (f < 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    const double slope = sol.t.dot(ms);
    double next = slope > 0.0 ? r - f / slope : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * r;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    warm = (next / r) * sol.t;
    r = next;
  }
  if (!best || best_err > accept) {
    throw NumericalDegeneracy("radial_root: level set not reached along direction (|Lambda - u^2/2| = " +
                              std::to_string(best_err) + ")");
  }
  RadialSolution out;
  out.s = s;
  out.r = best_r;
  out.t_x = best->t;
  out.solution = std::move(*best);
  return out;
}

double delta(const LevelSetProblem& p, const RadialSolution& sol, double u) {
  const int d = p.dim();
  const double inner = sol.s.dot(p.origin_root().matrix() * sol.t_x);
  if (!(std::abs(inner) >= 1e-14)) {
    throw NumericalDegeneracy("delta: s' kappa''(0)^{1/2} t_x vanishes; the radial solve failed");
  }
  const double half_d = 0.5 * d;
  const double log_delta = std::lgamma(half_d) - 0.5 * log_det_pd(sol.solution.hess_at_t) +
                           0.5 * p.origin_log_det() + (d - 1) * std::log(sol.r) -
                           std::log(2.0) - half_d * std::log(std::numbers::pi) -
                           (d - 2) * std::log(u) - std::log(std::abs(inner));
  return std::exp(log_delta);
}

GEstimate big_g(const LevelSetProblem& p, double u, std::size_t n_samples, RngStream& rng,
                double epsilon, unsigned threads) {
  check_admissible(p, u, epsilon);
  const int d = p.dim();
  if (d == 1) {
    Vector s(1);
    double g = 0.0;
    for (double sign : {1.0, -1.0}) {
      s[0] = sign;
      g += delta(p, radial_root(p, s, u, epsilon), u);
    }
    return {g, 0.0, 2};
  }
  if (n_samples < 2) throw ContractViolation("big_g: need at least two sphere samples");
  const auto dirs = sphere_sample(d, n_samples, rng);
  std::vector<double> values(n_samples);
  for_each_chunk(n_samples, std::max(1u, threads), [&](std::size_t i) {
    values[i] = delta(p, radial_root(p, dirs[i], u, epsilon), u);
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n_samples);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n_samples - 1));
  const double area = sphere_area(d);
  return {area * mean, area * sd / std::sqrt(static_cast<double>(n_samples)), n_samples};
}

GEstimate big_g_rule(const LevelSetProblem& p, double u, int points_per_angle, double epsilon) {
  check_admissible(p, u, epsilon);
  const auto rule = spherical_product_rule(p.dim(), points_per_angle);
  double g = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    g += rule.weights[i] * delta(p, radial_root(p, rule.nodes[i], u, epsilon), u);
  }
  return {g, 0.0, rule.nodes.size()};
}

double tail_constant(double b, int k) {
  return std::exp(0.5 * (k - 1) * std::log(b) - 0.5 * (k - 3) * std::log(2.0) -
                  std::lgamma(0.5 * (k - 1)));
}

namespace {

// (c_b / b) u^{k-3} exp(-b u^2 / 2)
double correction_scale(double b, int k, double u) {
  return std::exp(std::log(tail_constant(b, k)) - std::log(b) + (k - 3) * std::log(u) -
                  0.5 * b * u * u);
}

}  // namespace

double tail_lr_unclamped(double b, int k, double u, double g) {
  if (!(u > 0.0)) throw ContractViolation("tail_lr: u must be positive");
  return chi_sq_survival(b * u * u, k - 1) + correction_scale(b, k, u) * (g - 1.0);
}

double tail_lr(double b, int k, double u, double g) {
  return std::clamp(tail_lr_unclamped(b, k, u, g), 0.0, 1.0);
}

double adjusted_u(double b, double u, double g) {
  if (!(g > 0.0)) throw DomainError("tail_bn: G(u) must be positive");
  if (!(u > 0.0)) throw ContractViolation("tail_bn: u must be positive");
  return u - std::log(g) / (b * u);
}

double tail_bn(double b, int k, double u, double g) {
  const double us = adjusted_u(b, u, g);
  if (us <= 0.0) return 1.0;
  return chi_sq_survival(b * us * us, k - 1);
}

TailApproximation assemble_tail(double b, int k, double u, const GEstimate& g) {
  TailApproximation out;
  out.u = u;
  out.g = g.g;
  out.g_se = g.standard_error;
  out.n_quadrature = g.n;
  const double raw = tail_lr_unclamped(b, k, u, g.g);
  out.p_lr = std::clamp(raw, 0.0, 1.0);
  out.lr_clamped = raw != out.p_lr;
  out.u_star = adjusted_u(b, u, g.g);
  out.p_bn = tail_bn(b, k, u, g.g);
  out.se_lr = correction_scale(b, k, u) * g.standard_error;
  if (out.u_star > 0.0) {
    const double x = b * out.u_star * out.u_star;
    out.se_bn = 2.0 * chi_sq_density(x, k - 1) * out.u_star / (u * g.g) * g.standard_error;
  }
  return out;
}

TailApproximation approximate_tail(const LevelSetProblem& p, double u, const TailOptions& options,
                                   RngStream& rng) {
  const GEstimate g =
      options.quadrature
          ? big_g_rule(p, u, options.rule_points, options.epsilon)
          : big_g(p, u, options.sphere_samples, rng, options.epsilon, options.threads);
  return assemble_tail(p.blocks(), p.treatments(), u, g);
}

}  // namespace tiltperm
