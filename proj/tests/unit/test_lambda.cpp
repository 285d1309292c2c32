#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include <tiltperm/errors.hpp>
#include <tiltperm/lambda.hpp>

#include "support/oracles.hpp"

using namespace tiltperm;

namespace {

SortedDesign random_sorted(int b, int k, std::uint64_t seed, int family = 0) {
  RngStream rng(seed, 0);
  return sort_design(make_design(oracle::random_matrix(b, k, rng, family)));
}

SortedDesign fixed_k3() {
  Matrix a(2, 3);
  a << -1, 0, 1, -1.5, 0.2, 1.3;
  return SortedDesign::from_sorted_rows(a);
}

// Reduced coordinates of the vertex that puts sorted column perm[j] at
// coordinate j.
Vector vertex_of(const SortedDesign& d, const std::vector<int>& perm) {
  const int k = static_cast<int>(d.treatments());
  Vector x(k - 1);
  for (int j = 0; j + 1 < k; ++j) x[j] = d.col_means()[perm[static_cast<std::size_t>(j)]];
  return x;
}

// kappa_M(t) = kappa(M' t): the CGF of M X for an invertible M.
class LinearImage final : public CumulantModel {
 public:
  LinearImage(const CumulantModel& base, Matrix m) : base_(base), m_(std::move(m)) {}
  Eigen::Index dim() const override { return m_.rows(); }
  TiltPoint evaluate(const Vector& t) const override {
    auto tp = base_.evaluate(m_.transpose() * t);
    return {t, tp.kappa, m_ * tp.grad, SymMatrix(m_ * tp.hess.matrix() * m_.transpose())};
  }

 private:
  const CumulantModel& base_;
  Matrix m_;
};

}  // namespace

TEST(Facets, CountAndHexagon) {
  for (int k = 2; k <= 6; ++k) {
    const auto f = facets(random_sorted(3, k, static_cast<std::uint64_t>(k)));
    EXPECT_EQ(f.size(), 2u * ((1u << (k - 1)) - 1u)) << k;
  }
  const auto hex = facets(fixed_k3());
  ASSERT_EQ(hex.size(), 6u);
  EXPECT_EQ(hex[0].subset, 1u);
  EXPECT_EQ(hex[0].side, FaceSide::lower);
  EXPECT_NEAR(hex[0].bound, -1.25, 1e-15);
  EXPECT_NEAR(hex[1].bound, 1.15, 1e-15);
}

TEST(Classify, OriginIsInterior) {
  EXPECT_EQ(classify(random_sorted(4, 4, 1), Vector::Zero(3)).kind, Location::interior);
}

TEST(Classify, EveryPermutedMeanVectorIsAVertex) {
  const auto d = random_sorted(5, 4, 2, 1);
  std::vector<int> perm{0, 1, 2, 3};
  int count = 0;
  do {
    const auto loc = classify(d, vertex_of(d, perm));
    ASSERT_EQ(loc.kind, Location::vertex);
    EXPECT_EQ(loc.vertex, std::vector<int>(perm.begin(), perm.end() - 1));
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_EQ(count, 24);
}

TEST(Classify, SingleFaceAndApproach) {
  Matrix a(2, 3);
  a << -1, 0, 1, -1, 0, 1;
  const auto d = SortedDesign::from_sorted_rows(a);
  const auto on_face = classify(d, Eigen::Vector2d(-1.0, 0.3));
  ASSERT_EQ(on_face.kind, Location::boundary);
  ASSERT_EQ(on_face.active.size(), 1u);
  EXPECT_EQ(on_face.active[0].size, 1);
  EXPECT_EQ(on_face.active[0].subset, 1u);
  EXPECT_EQ(on_face.active[0].side, FaceSide::lower);
  for (double eps : {1e-3, 1e-6}) {
    EXPECT_EQ(classify(d, Eigen::Vector2d(-1.0 + eps, eps / 2)).kind, Location::interior);
  }
  EXPECT_EQ(classify(d, Eigen::Vector2d(-1.0, 0.0)).kind, Location::vertex);
  EXPECT_EQ(classify(d, Eigen::Vector2d(-1.1, 0.3)).kind, Location::exterior);
}

TEST(Solve, OriginHasZeroTilt) {
  const auto d = random_sorted(6, 4, 3);
  const auto sol = solve(d, Vector::Zero(3));
  EXPECT_LT(sol.t.norm(), 1e-12);
  EXPECT_NEAR(sol.lambda, 0.0, 1e-15);
}

TEST(Solve, TwoTreatmentClosedForm) {
  Matrix a(1, 2);
  a << -1, 1;
  const auto d = SortedDesign::from_sorted_rows(a);
  const double x = 0.5;
  const double expected = x * std::atanh(x) + 0.5 * std::log(1 - x * x);
  EXPECT_NEAR(expected, 0.130812, 5e-7);
  EXPECT_NEAR(lambda_at(d, Vector::Constant(1, x)), expected, 1e-12);
  for (double y : {-0.999, -0.3, 0.01, 0.9, 0.999999}) {
    EXPECT_NEAR(lambda_at(d, Vector::Constant(1, y)),
                y * std::atanh(y) + 0.5 * std::log(1 - y * y), 1e-9)
        << y;
  }
}

TEST(Solve, MatchesPatternSearchOracle) {
  RngStream rng(17, 0);
  for (int k : {3, 4}) {
    const auto d = random_sorted(5, k, 40 + k, 1);
    for (int rep = 0; rep < 4; ++rep) {
      const Vector x = oracle::random_interior(d, rng, 0.6);
      EXPECT_NEAR(lambda_at(d, x), oracle::lambda(d.a(), x), 1e-8) << k;
    }
  }
}

TEST(Solve, DualityResidualAndValue) {
  RngStream rng(21, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 2 + rep % 4;
    const auto d = random_sorted(2 + rep % 9, k, 300 + rep, rep % 3);
    const Vector x = oracle::random_interior(d, rng, 0.95);
    const auto sol = solve(d, x);
    const auto tp = kappa_eval(d, sol.t);
    EXPECT_LE((tp.grad - x).norm(), 1e-10 * (1 + x.norm()));
    EXPECT_NEAR(sol.lambda, sol.t.dot(x) - tp.kappa, 1e-14 * (1 + std::abs(sol.t.dot(x))));
  }
}

TEST(Solve, RejectsNonInterior) {
  const auto d = fixed_k3();
  EXPECT_THROW(solve(d, Eigen::Vector2d(-1.25, 0.0)), DomainError);
}

TEST(Solve, WarmStartGivesSameAnswer) {
  const auto d = random_sorted(6, 4, 9);
  RngStream rng(2, 2);
  const Vector x = oracle::random_interior(d, rng, 0.8);
  const Vector warm = Vector::Constant(3, 0.7);
  EXPECT_NEAR(solve(d, x).lambda, solve(d, x, &warm).lambda, 1e-12);
}

TEST(Lambda, Convex) {
  RngStream rng(23, 0);
  const auto d = random_sorted(6, 4, 5, 2);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector x = oracle::random_interior(d, rng, 0.9);
    const Vector y = oracle::random_interior(d, rng, 0.9);
    const double c = rng.uniform();
    EXPECT_LE(lambda_at(d, c * x + (1 - c) * y), c * lambda_at(d, x) + (1 - c) * lambda_at(d, y) + 1e-10);
  }
}

TEST(Lambda, VertexAndExterior) {
  const auto d = random_sorted(5, 4, 6);
  EXPECT_NEAR(lambda_at(d, vertex_of(d, {3, 1, 0, 2})), std::log(24.0), 1e-15);
  EXPECT_NEAR(std::log(24.0), 3.17805, 5e-6);
  EXPECT_EQ(lambda_at(d, 2.0 * vertex_of(d, {3, 1, 0, 2})), std::numeric_limits<double>::infinity());
}

TEST(Lambda, FaceCentroidIsLogK) {
  for (int k : {3, 4, 5}) {
    const auto d = random_sorted(6, k, 60 + k, 1);
    const Vector& m = d.col_means();
    Vector x = Vector::Constant(k - 1, -m[0] / (k - 1));
    x[0] = m[0];
    const auto loc = classify(d, x);
    ASSERT_EQ(loc.kind, Location::boundary);
    EXPECT_NEAR(lambda_at(d, x), std::log(static_cast<double>(k)), 1e-9) << k;
  }
}

TEST(Lambda, EdgeOfHexagonIsLogThreePlusOneDimensionalPart) {
  const auto d = random_sorted(5, 3, 71, 2);
  const Vector& m = d.col_means();
  // Lower face S = {1}: x_1 = A_1; the other two treatments share A_2 + A_3.
  const double mid = 0.5 * (m[1] + m[2]);
  for (double frac : {-0.8, -0.3, 0.0, 0.5, 0.9}) {
    const Eigen::Vector2d x(m[0], mid + frac * 0.5 * (m[2] - m[1]));
    const auto block = restricted_block(d, BlockSide::upper, 1);
    const double part = lambda_at(*block.design, Vector::Constant(1, x[1] - block.shift));
    EXPECT_NEAR(lambda_at(d, x), std::log(3.0) + part, 1e-12);
    // Continuity from the interior.
    const double eps = 1e-6;
    EXPECT_NEAR(lambda_at(d, (1 - eps) * x), std::log(3.0) + part, 1e-3);
  }
}

TEST(Lambda, AffineInvariance) {
  RngStream rng(31, 0);
  const auto d = random_sorted(7, 4, 8, 1);
  const PermutationCgf base(d);
  Matrix m(3, 3);
  m << 2, 0.3, -1, 0.1, 1, 0.4, 0.5, -0.2, 3;
  const LinearImage image(base, m);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = oracle::random_interior(d, rng, 0.9);
    const double direct = maximize_conjugate(base, x).lambda;
    const double mapped = maximize_conjugate(image, m * x).lambda;
    EXPECT_NEAR(direct, mapped, 1e-9);
  }
}

TEST(RayRadius, TwoTreatments) {
  Matrix a(2, 2);
  a << -1, 1, -3, 3;
  const auto d = SortedDesign::from_sorted_rows(a);
  EXPECT_NEAR(ray_boundary_radius(d, Vector::Constant(1, 1.0)), 2.0, 1e-15);
  EXPECT_NEAR(ray_boundary_radius(d, Vector::Constant(1, -1.0)), 2.0, 1e-15);
}

TEST(RayRadius, VertexAndRandomDirections) {
  const auto d = random_sorted(6, 4, 12, 2);
  EXPECT_NEAR(ray_boundary_radius(d, vertex_of(d, {2, 0, 3, 1})), 1.0, 1e-12);
  RngStream rng(1, 9);
  for (int rep = 0; rep < 100; ++rep) {
    Vector dir(3);
    for (int j = 0; j < 3; ++j) dir[j] = rng.normal();
    const double r = ray_boundary_radius(d, dir);
    EXPECT_NE(classify(d, r * dir).kind, Location::interior);
    EXPECT_NE(classify(d, r * dir).kind, Location::exterior);
    EXPECT_EQ(classify(d, 0.999 * r * dir).kind, Location::interior);
  }
  EXPECT_THROW(ray_boundary_radius(d, Vector::Zero(3)), ContractViolation);
}
