#include "tiltperm/lambda.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tiltperm/errors.hpp"

namespace tiltperm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// bounds[l] for l = 1..k-1: sums of the l smallest / l largest column means.
struct FaceBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

FaceBounds face_bounds(const Vector& means) {
  const auto k = static_cast<std::size_t>(means.size());
  FaceBounds fb{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t l = 1; l < k; ++l) {
    fb.lower[l] = fb.lower[l - 1] + means[static_cast<Eigen::Index>(l - 1)];
    fb.upper[l] = fb.upper[l - 1] + means[static_cast<Eigen::Index>(k - l)];
  }
  return fb;
}

std::vector<Face> build_facets(const Vector& means) {
  const int d = static_cast<int>(means.size()) - 1;
  const auto fb = face_bounds(means);
  std::vector<Face> out;
  out.reserve(2 * ((std::size_t{1} << d) - 1));
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    const int l = std::popcount(mask);
    out.push_back({l, mask, FaceSide::lower, fb.lower[static_cast<std::size_t>(l)]});
    out.push_back({l, mask, FaceSide::upper, fb.upper[static_cast<std::size_t>(l)]});
  }
  return out;
}

double subset_sum(const Vector& x, std::uint32_t mask) {
  double s = 0.0;
  while (mask != 0) {
    s += x[std::countr_zero(mask)];
    mask &= mask - 1;
  }
  return s;
}

double slack(const Face& f, double sum) {
  return f.side == FaceSide::lower ? sum - f.bound : f.bound - sum;
}

// The facet list is ordered by mask, two entries per mask, so subset sums can
// be built incrementally from the mask with its lowest bit cleared.
DomainLocation classify_with(const std::vector<Face>& faces, const Vector& x, double tol) {
  const int d = static_cast<int>(x.size());
  const std::size_t n_masks = std::size_t{1} << d;
  thread_local std::vector<double> sums;
  sums.assign(n_masks, 0.0);

  DomainLocation loc;
  loc.margin = kInf;
  bool outside = false;
  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    const std::size_t rest = mask & (mask - 1);
    sums[mask] = sums[rest] + x[std::countr_zero(static_cast<std::uint32_t>(mask))];
    for (int side = 0; side < 2; ++side) {
      const Face& f = faces[2 * (mask - 1) + static_cast<std::size_t>(side)];
      const double s = slack(f, sums[mask]);
      loc.margin = std::min(loc.margin, s);
      if (s < -tol) {
        outside = true;
      } else if (s <= tol) {
        loc.active.push_back(f);
      }
    }
  }
  if (outside) {
    loc.kind = Location::exterior;
    loc.active.clear();
    return loc;
  }
  if (loc.active.empty()) {
    loc.kind = Location::interior;
    return loc;
  }
  loc.kind = Location::boundary;
  if (static_cast<int>(loc.active.size()) >= d) {
    Matrix normals = Matrix::Zero(static_cast<Eigen::Index>(loc.active.size()), d);
    for (std::size_t r = 0; r < loc.active.size(); ++r) {
      for (int j = 0; j < d; ++j) {
        if (loc.active[r].subset & (1u << j)) normals(static_cast<Eigen::Index>(r), j) = 1.0;
      }
    }
    Eigen::FullPivLU<Matrix> lu(normals);
    if (lu.rank() == d) {
      loc.kind = Location::vertex;
      // Rank the full coordinate vector (x, -sum x): the i-th smallest
      // coordinate sits at the i-th smallest column mean.
      Vector full(d + 1);
      full.head(d) = x;
      full[d] = -x.sum();
      std::vector<int> order(static_cast<std::size_t>(d + 1));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return full[a] < full[b]; });
      std::vector<int> rank(static_cast<std::size_t>(d + 1));
      for (int r = 0; r <= d; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
      loc.vertex.assign(rank.begin(), rank.begin() + d);
    }
  }
  return loc;
}

double log_binomial(int n, int r) {
  return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

Vector newton_direction(const SymMatrix& hess, const Vector& g) {
  Eigen::LLT<Matrix> llt(hess.matrix());
  if (llt.info() == Eigen::Success) {
    Vector step = llt.solve(g);
    if (step.allFinite()) return step;
  }
  // Nearly singular Hessian (far out along a facet): invert on the
  // eigenbasis with a relative floor.
  const auto eig = sym_eigen(hess);
  if (!(eig.values.maxCoeff() > 0.0)) return g;
  const double floor = eig.values.maxCoeff() * 1e-14;
  const Vector inv = eig.values.cwiseMax(floor).cwiseInverse();
  return eig.vectors * inv.asDiagonal() * (eig.vectors.transpose() * g);
}

SaddlepointSolution make_solution(const Vector& x, const TiltPoint& tp, int iterations,
                                  double residual) {
  return {x, tp.t, std::max(0.0, tp.t.dot(x) - tp.kappa), tp.hess, iterations, residual};
}

SaddlepointSolution solve_scalar(const CumulantModel& model, const Vector& x, const Vector* warm,
                                 const SolverOptions& options) {
  const double target = x[0];
  const double tol = options.residual_tol * (1.0 + std::abs(target));
  Vector t = (warm && warm->size() == 1 && warm->allFinite()) ? *warm : Vector::Zero(1);
  TiltPoint tp = model.evaluate(t);
  double lo = -kInf;
  double hi = kInf;
  double best_res = kInf;
  Vector best_t = t;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double f = tp.grad[0] - target;
    const double res = std::abs(f);
    if (res < best_res) {
      best_res = res;
      best_t = tp.t;
    }
    if (res <= tol) return make_solution(x, tp, it, res);
    const double tc = tp.t[0];
    if (f < 0.0) {
      lo = std::max(lo, tc);
    } else {
      hi = std::min(hi, tc);
    }
    const double h = tp.hess(0, 0);
    double next = h > 0.0 ? tc - f / h : std::numeric_limits<double>::quiet_NaN();
    const bool bracketed = std::isfinite(lo) && std::isfinite(hi);
    if (bracketed) {
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max({std::abs(lo), std::abs(hi), 1e-300})) {
        break;
      }
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    } else if (!std::isfinite(next)) {
      const double jump = std::max(1.0, 2.0 * std::abs(tc));
      next = f < 0.0 ? tc + jump : tc - jump;
    }
    t[0] = next;
    tp = model.evaluate(t);
  }
  throw NearBoundary("saddlepoint equation has no numerical solution at x = " +
                         std::to_string(target) + " (point is on or near the boundary)",
                     best_t, best_res);
}

}  // namespace

std::vector<Face> facets(const SortedDesign& d) { return build_facets(d.col_means()); }

double default_tolerance(const SortedDesign& d) { return 1e-9 * d.scale(); }

DomainLocation classify(const SortedDesign& d, const Vector& x, std::optional<double> tol) {
  if (x.size() != d.treatments() - 1) throw ContractViolation("classify: x has wrong dimension");
  const double t = tol.value_or(default_tolerance(d));
  if (t < 0.0) throw ContractViolation("classify: tolerance must be non-negative");
  return classify_with(build_facets(d.col_means()), x, t);
}

SaddlepointSolution maximize_conjugate(const CumulantModel& model, const Vector& x,
                                       const Vector* warm_start, const SolverOptions& options) {
  if (x.size() != model.dim()) throw ContractViolation("maximize_conjugate: x has wrong dimension");
  if (!x.allFinite()) throw ContractViolation("maximize_conjugate: x must be finite");
  if (model.dim() == 1) return solve_scalar(model, x, warm_start, options);

  const double tol = options.residual_tol * (1.0 + x.norm());
  Vector t = (warm_start && warm_start->size() == x.size() && warm_start->allFinite())
                 ? *warm_start
                 : Vector::Zero(x.size());
  TiltPoint tp = model.evaluate(t);
  double objective = t.dot(x) - tp.kappa;
  Vector g = x - tp.grad;
  double res = g.norm();

  for (int it = 0; it < options.max_iterations; ++it) {
    if (res <= tol) return make_solution(x, tp, it, res);

    Vector step = newton_direction(tp.hess, g);
    double slope = g.dot(step);
    if (!(slope > 0.0) || !std::isfinite(slope)) {
      step = g;
      slope = g.squaredNorm();
    }
    // Flat directions (weight collapsed on one permutation) give enormous
    // steps; bound the growth of t per iteration.
    const double cap = 1e3 * (1.0 + t.norm());
    const double len = step.norm();
    if (len > cap) {
      step *= cap / len;
      slope *= cap / len;
    }
    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      const Vector trial = t + alpha * step;
      TiltPoint next = model.evaluate(trial);
      if (!std::isfinite(next.kappa)) continue;
      const double trial_objective = trial.dot(x) - next.kappa;
      const Vector trial_g = x - next.grad;
      const double trial_res = trial_g.norm();
      // Rounding slack so the final quadratically convergent steps, whose
      // objective gain is below double resolution, are not rejected.
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(objective) + std::abs(trial.dot(x)) + std::abs(next.kappa));
      if (trial_objective >= objective + options.armijo * alpha * slope - noise ||
          trial_res <= 0.5 * res) {
        t = trial;
        tp = std::move(next);
        objective = trial_objective;
        g = trial_g;
        res = trial_res;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (res <= tol) return make_solution(x, tp, options.max_iterations, res);
  throw NearBoundary("saddlepoint iteration did not converge (residual " + std::to_string(res) +
                         "); the point is on or near the boundary of the admissible domain",
                     t, res);
}

LambdaSolver::LambdaSolver(const SortedDesign& design, SolverOptions options,
                           std::optional<double> tolerance)
    : design_(design),
      cgf_(design),
      facets_(build_facets(design.col_means())),
      options_(options),
      tol_(tolerance.value_or(default_tolerance(design))) {}

DomainLocation LambdaSolver::classify(const Vector& x) const {
  if (x.size() != design_.treatments() - 1) {
    throw ContractViolation("classify: x has wrong dimension");
  }
  return classify_with(facets_, x, tol_);
}

SaddlepointSolution LambdaSolver::solve(const Vector& x, const Vector* warm_start) const {
  const auto loc = classify(x);
  if (loc.kind != Location::interior) {
    throw DomainError(
        "saddlepoint equation has no solution outside the open admissible domain; "
        "use the boundary decomposition (lambda_boundary / lambda_at) for this point");
  }
  return maximize_conjugate(cgf_, x, warm_start, options_);
}

double LambdaSolver::sub_lambda(const std::optional<SortedDesign>& sub, const Vector& x) const {
  if (!sub) return 0.0;
  if (sub->total_ss() <= 1e-24 * std::max(1.0, design_.total_ss())) {
    // Constant run: the sub-polytope is the single point 0.
    return x.norm() <= 2.0 * tol_ ? 0.0 : kInf;
  }
  // Faces of faces: the sub-point may itself lie on the sub-polytope's
  // boundary, handled by the same dispatch one level down.
  const LambdaSolver inner(*sub, options_, 2.0 * tol_);
  return inner.evaluate(x).value;
}

double LambdaSolver::boundary_value(const Vector& x, const Face& face) const {
  const int k = treatments();
  const int d = k - 1;
  if (x.size() != d) throw ContractViolation("lambda_boundary: x has wrong dimension");
  const double s = slack(face, subset_sum(x, face.subset));
  if (std::abs(s) > tol_) {
    throw ContractViolation("lambda_boundary: face is not active at x (slack " +
                            std::to_string(s) + ")");
  }
  const int l = face.size;
  // On a lower face the coordinates in S carry the l smallest entries of each
  // block and the rest (with the implicit k-th coordinate) the k-l largest;
  // an upper face swaps the roles.
  const RestrictedBlock in_s = face.side == FaceSide::lower
                                   ? restricted_block(design_, BlockSide::lower, l)
                                   : restricted_block(design_, BlockSide::upper, k - l);
  const RestrictedBlock rest = face.side == FaceSide::lower
                                   ? restricted_block(design_, BlockSide::upper, l)
                                   : restricted_block(design_, BlockSide::lower, k - l);

  Vector x1(std::max(0, l - 1));
  Vector x2(std::max(0, d - l));
  int n1 = 0;
  int n2 = 0;
  for (int j = 0; j < d; ++j) {
    if (face.subset & (1u << j)) {
      // The last coordinate of S is implied by the face equation.
      if (n1 < l - 1) x1[n1++] = x[j] - in_s.shift;
    } else {
      x2[n2++] = x[j] - rest.shift;
    }
  }
  const double lambda1 = sub_lambda(in_s.design, x1);
  const double lambda2 = sub_lambda(rest.design, x2);
  return lambda1 + lambda2 + log_binomial(k, l);
}

LambdaValue LambdaSolver::evaluate(const Vector& x, Vector* warm) const {
  const auto loc = classify(x);
  switch (loc.kind) {
    case Location::exterior:
      return {kInf, LambdaRoute::exterior};
    case Location::vertex:
      return {std::lgamma(treatments() + 1.0), LambdaRoute::vertex};
    case Location::boundary:
      return {boundary_value(x, loc.active.front()), LambdaRoute::boundary};
    case Location::interior:
      break;
  }
  try {
    auto sol = maximize_conjugate(cgf_, x, warm, options_);
    if (warm) *warm = sol.t;
    return {sol.lambda, LambdaRoute::interior};
  } catch (const NearBoundary&) {
  }
  if (warm) {
    try {
      auto sol = maximize_conjugate(cgf_, x, nullptr, options_);
      *warm = sol.t;
      return {sol.lambda, LambdaRoute::interior};
    } catch (const NearBoundary&) {
    }
  }
  // Numerically on the boundary: use the closest face if it is very close.
  if (loc.margin <= 1e-6 * design_.scale()) {
    const Vector tightened = x;
    const LambdaSolver relaxed(design_, options_, 2.0 * std::abs(loc.margin) + tol_);
    const auto near = relaxed.classify(tightened);
    if (near.kind == Location::vertex) return {std::lgamma(treatments() + 1.0), LambdaRoute::vertex};
    if (near.kind == Location::boundary) {
      return {relaxed.boundary_value(tightened, near.active.front()), LambdaRoute::boundary};
    }
  }
  return {kInf, LambdaRoute::solver_failure};
}

double LambdaSolver::ray_radius(const Vector& direction) const {
  if (direction.size() != design_.treatments() - 1) {
    throw ContractViolation("ray_radius: direction has wrong dimension");
  }
  if (!(direction.norm() > 0.0)) throw ContractViolation("ray_radius: direction must be nonzero");
  if (!(design_.scale() > 0.0)) {
    throw DegenerateDesign("ray_radius: the admissible polytope has zero width");
  }
  double radius = kInf;
  for (const auto& f : facets_) {
    const double along = subset_sum(direction, f.subset);
    // Facet bound b: lower needs r * along >= b (b < 0), upper r * along <= b.
    if (f.side == FaceSide::lower && along < 0.0) radius = std::min(radius, f.bound / along);
    if (f.side == FaceSide::upper && along > 0.0) radius = std::min(radius, f.bound / along);
  }
  return std::max(0.0, radius);
}

SaddlepointSolution solve(const SortedDesign& d, const Vector& x, const Vector* warm_start) {
  return LambdaSolver(d).solve(x, warm_start);
}

double lambda_boundary(const SortedDesign& d, const Vector& x, const Face& face) {
  return LambdaSolver(d).boundary_value(x, face);
}

double lambda_at(const SortedDesign& d, const Vector& x) { return LambdaSolver(d).evaluate(x).value; }

double ray_boundary_radius(const SortedDesign& d, const Vector& direction) {
  return LambdaSolver(d).ray_radius(direction);
}

}  // namespace tiltperm
