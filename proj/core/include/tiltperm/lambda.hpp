#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tiltperm/cgf.hpp"
#include "tiltperm/design.hpp"

namespace tiltperm {

enum class FaceSide { lower, upper };

/// One facet inequality of the admissible polytope, written on the reduced
/// coordinates x_1..x_{k-1}:
///   lower:  sum_{s in S} x_s >= sum of the l smallest column means
///   upper:  sum_{s in S} x_s <= sum of the l largest column means
/// where S is a nonempty subset of {1..k-1} of size l.
struct Face {
  int size = 0;              // l
  std::uint32_t subset = 0;  // bit j set <=> reduced coordinate j is in S
  FaceSide side = FaceSide::lower;
  double bound = 0.0;
};

/// All 2 (2^{k-1} - 1) facet inequalities, ordered by subset mask, lower
/// before upper.
std::vector<Face> facets(const SortedDesign& d);

enum class Location { interior, boundary, vertex, exterior };

struct DomainLocation {
  Location kind = Location::interior;
  std::vector<Face> active;  // facets holding with equality (within tol)
  std::vector<int> vertex;   // Vertex only: 0-based column index of each coordinate
  double margin = 0.0;       // smallest slack over all facets; negative outside
};

/// 1e-9 times the largest |column mean|.
double default_tolerance(const SortedDesign& d);

DomainLocation classify(const SortedDesign& d, const Vector& x,
                        std::optional<double> tol = std::nullopt);

struct SolverOptions {
  int max_iterations = 200;
  double armijo = 1e-4;
  double residual_tol = 1e-10;  // scaled by (1 + |x|)
};

/// Maximizer of t'x - kappa(t).
struct SaddlepointSolution {
  Vector x;
  Vector t;
  double lambda = 0.0;
  SymMatrix hess_at_t;
  int iterations = 0;
  double residual = 0.0;  // |kappa'(t) - x|
};

/// Damped Newton (backtracking, Armijo) on the concave map t -> t'x - kappa(t)
/// for any cumulant model; one-dimensional models use a bracketed
/// Newton-bisection. No domain check: throws NearBoundary when the iteration
/// cap is hit or progress stalls above the residual tolerance.
SaddlepointSolution maximize_conjugate(const CumulantModel& model, const Vector& x,
                                       const Vector* warm_start = nullptr,
                                       const SolverOptions& options = {});

/// How a value of the statistic was obtained.
enum class LambdaRoute { interior, boundary, vertex, exterior, solver_failure };

struct LambdaValue {
  double value = 0.0;
  LambdaRoute route = LambdaRoute::interior;
};

/// The statistic Lambda for one design, on the whole of R^{k-1}: Newton
/// inside the polytope, the product decomposition over restricted blocks on
/// its faces, log k! at vertices, +infinity outside.
class LambdaSolver {
 public:
  explicit LambdaSolver(const SortedDesign& design, SolverOptions options = {},
                        std::optional<double> tolerance = std::nullopt);

  const SortedDesign& design() const noexcept { return design_; }
  const PermutationCgf& cgf() const noexcept { return cgf_; }
  const std::vector<Face>& facets() const noexcept { return facets_; }
  double tolerance() const noexcept { return tol_; }
  int treatments() const noexcept { return static_cast<int>(design_.treatments()); }

  DomainLocation classify(const Vector& x) const;

  /// Interior points only; throws DomainError otherwise.
  SaddlepointSolution solve(const Vector& x, const Vector* warm_start = nullptr) const;

  /// Lambda on an active face: Lambda_1 + Lambda_2 + log C(k, l), each part
  /// the statistic of a restricted block, evaluated recursively.
  double boundary_value(const Vector& x, const Face& face) const;

  /// Total evaluation. When `warm` is given it seeds the interior solve and
  /// receives the new tilt on success.
  LambdaValue evaluate(const Vector& x, Vector* warm = nullptr) const;

  /// Largest r >= 0 with r * direction in the closed polytope.
  double ray_radius(const Vector& direction) const;

 private:
  double sub_lambda(const std::optional<SortedDesign>& sub, const Vector& x) const;

  SortedDesign design_;
  PermutationCgf cgf_;
  std::vector<Face> facets_;
  SolverOptions options_;
  double tol_;
};

SaddlepointSolution solve(const SortedDesign& d, const Vector& x,
                          const Vector* warm_start = nullptr);
double lambda_boundary(const SortedDesign& d, const Vector& x, const Face& face);
double lambda_at(const SortedDesign& d, const Vector& x);
double ray_boundary_radius(const SortedDesign& d, const Vector& direction);

}  // namespace tiltperm
