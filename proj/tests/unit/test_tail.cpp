#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <tiltperm/errors.hpp>
#include <tiltperm/tail.hpp>

#include "support/oracles.hpp"

using namespace tiltperm;

namespace {

SortedDesign random_sorted(int b, int k, std::uint64_t seed, int family = 0, double scale = 1.0) {
  RngStream rng(seed, 0);
  return sort_design(make_design(scale * oracle::random_matrix(b, k, rng, family)));
}

SymMatrix random_cov(int d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const Matrix a = oracle::random_matrix(d, d, rng);
  return SymMatrix(a * a.transpose() + 0.5 * Matrix::Identity(d, d));
}

Vector unit(int d, RngStream& rng) {
  Vector s(d);
  for (int j = 0; j < d; ++j) s[j] = rng.normal();
  return s.normalized();
}

}  // namespace

TEST(RadialRoot, QuadraticGivesRadiusU) {
  const GaussianLevelSet g(random_cov(3, 1), 10.0);
  RngStream rng(2, 0);
  for (double u : {0.3, 1.0, 2.5}) {
    const auto sol = radial_root(g, unit(3, rng), u);
    EXPECT_NEAR(sol.r, u, 1e-9);
  }
}

TEST(RadialRoot, LevelIsHitOnDesigns) {
  RngStream rng(3, 0);
  for (int k : {2, 3, 4, 5}) {
    const DesignLevelSet p(random_sorted(8, k, 50 + k, 2));
    for (double u : {0.05, 0.6, 1.1}) {
      const Vector s = k == 2 ? Vector::Constant(1, 1.0) : unit(k - 1, rng);
      const auto sol = radial_root(p, s, u);
      const Vector x = sol.r * (p.origin_root().matrix() * s);
      EXPECT_NEAR(lambda_at(p.solver().design(), x), 0.5 * u * u, 1e-9);
      EXPECT_GT(sol.r, 0.0);
      EXPECT_LT(sol.r, p.ray_radius(p.origin_root().matrix() * s));
    }
  }
}

TEST(RadialRoot, SmallUGivesSmallRadius) {
  const DesignLevelSet p(random_sorted(6, 3, 4));
  const auto sol = radial_root(p, Eigen::Vector2d(0.6, 0.8), 1e-4);
  EXPECT_NEAR(sol.r, 1e-4, 1e-5);
}

TEST(Admissibility, RejectsLevelsAtOrAboveLogK) {
  const DesignLevelSet p(random_sorted(5, 3, 5));
  const double bound = std::sqrt(2 * std::log(3.0));
  EXPECT_NEAR(bound, 1.4823, 5e-5);
  EXPECT_NO_THROW(check_admissible(p, 1.48));
  EXPECT_THROW(check_admissible(p, 1.4822), LevelSetEscapesDomain);
  EXPECT_THROW(check_admissible(p, 1.5), LevelSetEscapesDomain);
  EXPECT_THROW(radial_root(p, Eigen::Vector2d(1, 0), 1.5), LevelSetEscapesDomain);
  RngStream rng(1, 0);
  EXPECT_THROW(big_g(p, 1.5, 10, rng), LevelSetEscapesDomain);
  try {
    check_admissible(p, 1.5);
  } catch (const LevelSetEscapesDomain& e) {
    EXPECT_NE(std::string(e.what()).find("1.4823"), std::string::npos) << e.what();
  }
}

TEST(Delta, QuadraticIsConstant) {
  for (int d : {2, 3, 4}) {
    const GaussianLevelSet g(random_cov(d, 10 + static_cast<std::uint64_t>(d)), 7.0);
    const double expected = std::tgamma(0.5 * d) / (2 * std::pow(std::numbers::pi, 0.5 * d));
    RngStream rng(6, 0);
    for (double u : {0.4, 1.3}) {
      const Vector s = unit(d, rng);
      EXPECT_NEAR(delta(g, radial_root(g, s, u), u), expected, 1e-12);
    }
  }
}

TEST(Delta, InvariantUnderDataScaling) {
  const DesignLevelSet p1(random_sorted(8, 4, 7, 1));
  const DesignLevelSet p2(random_sorted(8, 4, 7, 1, 3.5));
  RngStream rng(8, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector s = unit(3, rng);
    const double d1 = delta(p1, radial_root(p1, s, 0.9), 0.9);
    const double d2 = delta(p2, radial_root(p2, s, 0.9), 0.9);
    EXPECT_GT(d1, 0.0);
    EXPECT_NEAR(d1, d2, 1e-9 * d1);
  }
}

TEST(BigG, QuadraticIsOne) {
  for (int d : {1, 2, 3}) {
    const GaussianLevelSet g(random_cov(d, 20 + static_cast<std::uint64_t>(d)), 10.0);
    EXPECT_NEAR(big_g_rule(g, 0.8, 16).g, 1.0, 1e-10);
    RngStream rng(1, 0);
    const auto mc = big_g(g, 0.8, 50, rng);
    EXPECT_NEAR(mc.g, 1.0, 1e-10);
    EXPECT_NEAR(mc.standard_error, 0.0, 1e-10);
  }
}

TEST(BigG, ReproducibleAndThreadIndependent) {
  const DesignLevelSet p(random_sorted(10, 4, 9, 2));
  RngStream a(5, 0), b(5, 0);
  const auto g1 = big_g(p, 1.0, 40, a, kDefaultEpsilon, 1);
  const auto g2 = big_g(p, 1.0, 40, b, kDefaultEpsilon, 3);
  EXPECT_EQ(g1.g, g2.g);
  EXPECT_EQ(g1.standard_error, g2.standard_error);
  EXPECT_EQ(g1.n, 40u);
}

TEST(BigG, MonteCarloAgreesWithRule) {
  const DesignLevelSet p(random_sorted(10, 3, 10, 1));
  RngStream rng(3, 0);
  const auto mc = big_g(p, 0.9, 2000, rng);
  const auto rule = big_g_rule(p, 0.9, 32);
  EXPECT_NEAR(mc.g, rule.g, 4 * mc.standard_error);
}

TEST(BigG, TwoTreatmentsIsTwoPointSum) {
  const DesignLevelSet p(random_sorted(6, 2, 11, 2));
  RngStream rng(1, 0);
  const auto g = big_g(p, 0.7, 100, rng);
  EXPECT_EQ(g.n, 2u);
  EXPECT_NEAR(g.g, big_g_rule(p, 0.7, 4).g, 1e-14);
}

TEST(TailFormulas, Constant) {
  EXPECT_NEAR(tail_constant(10, 4), std::pow(10, 1.5) / (std::sqrt(2.0) * std::tgamma(1.5)), 1e-12);
  EXPECT_NEAR(tail_constant(10, 4), 25.2313, 5e-5);
}

TEST(TailFormulas, UnitGReducesToChiSquare) {
  EXPECT_NEAR(tail_lr(10, 4, 1.2, 1.0), chi_sq_survival(14.4, 3), 1e-15);
  EXPECT_NEAR(tail_lr(10, 4, 1.2, 1.0), 0.002408, 5e-7);
  EXPECT_NEAR(tail_bn(10, 4, 1.2, 1.0), chi_sq_survival(14.4, 3), 1e-15);
  EXPECT_DOUBLE_EQ(adjusted_u(10, 1.2, 1.0), 1.2);
}

TEST(TailFormulas, LargerGFattensTheTail) {
  EXPECT_GT(tail_bn(10, 4, 1.0, 2.0), tail_bn(10, 4, 1.0, 1.0));
  EXPECT_GT(tail_lr(10, 4, 1.0, 2.0), tail_lr(10, 4, 1.0, 1.0));
  EXPECT_LT(adjusted_u(10, 1.0, 2.0), 1.0);
  EXPECT_THROW(tail_bn(10, 4, 1.0, 0.0), DomainError);
}

TEST(TailFormulas, ClampedToUnitInterval) {
  EXPECT_EQ(tail_lr(2, 4, 0.1, 1e6), 1.0);
  EXPECT_EQ(tail_lr(2, 4, 0.1, -1e6), 0.0);
  EXPECT_GT(tail_lr_unclamped(2, 4, 0.1, 1e6), 1.0);
  EXPECT_EQ(tail_bn(10, 4, 0.1, 1e6), 1.0);
}

TEST(ApproximateTail, GaussianReduction) {
  for (int k : {3, 4}) {
    const GaussianLevelSet g(random_cov(k - 1, 30 + static_cast<std::uint64_t>(k)), 10.0);
    TailOptions opt;
    opt.quadrature = true;
    RngStream rng(0, 0);
    for (double u : {0.6, 1.0, 1.4}) {
      const auto t = approximate_tail(g, u, opt, rng);
      EXPECT_NEAR(t.g, 1.0, 1e-6);
      EXPECT_NEAR(t.p_lr, chi_sq_survival(10 * u * u, k - 1), 1e-8);
      EXPECT_NEAR(t.p_bn, chi_sq_survival(10 * u * u, k - 1), 1e-8);
    }
  }
}

TEST(ApproximateTail, ScaleInvariant) {
  const DesignLevelSet p1(random_sorted(10, 4, 12, 2));
  const DesignLevelSet p2(random_sorted(10, 4, 12, 2, 0.01));
  TailOptions opt;
  opt.quadrature = true;
  opt.rule_points = 8;
  RngStream rng(0, 0);
  const auto t1 = approximate_tail(p1, 1.0, opt, rng);
  const auto t2 = approximate_tail(p2, 1.0, opt, rng);
  EXPECT_NEAR(t1.p_lr, t2.p_lr, 1e-9);
  EXPECT_NEAR(t1.p_bn, t2.p_bn, 1e-9);
}

TEST(ApproximateTail, StandardErrorsPropagate) {
  const GEstimate g{1.8, 0.1, 100};
  const auto t = assemble_tail(10, 4, 1.0, g);
  const double h = 1e-6;
  const double dlr = (tail_lr(10, 4, 1.0, 1.8 + h) - tail_lr(10, 4, 1.0, 1.8 - h)) / (2 * h);
  const double dbn = (tail_bn(10, 4, 1.0, 1.8 + h) - tail_bn(10, 4, 1.0, 1.8 - h)) / (2 * h);
  EXPECT_NEAR(t.se_lr, std::abs(dlr) * 0.1, 1e-8);
  EXPECT_NEAR(t.se_bn, std::abs(dbn) * 0.1, 1e-8);
}
