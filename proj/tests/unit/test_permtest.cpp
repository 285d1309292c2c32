#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include <tiltperm/errors.hpp>
#include <tiltperm/permtest.hpp>

#include "support/oracles.hpp"

using namespace tiltperm;

namespace {

BlockDesign random_design(int b, int k, std::uint64_t seed, int family = 0) {
  RngStream rng(seed, 0);
  return make_design(oracle::random_matrix(b, k, rng, family));
}

// Brute force over (k!)^b permuted matrices, with the statistic recomputed from scratch.
template <class Stat>
double brute_force_pvalue(const Matrix& raw, Stat stat) {
  const int b = static_cast<int>(raw.rows());
  const int k = static_cast<int>(raw.cols());
  const double observed = stat(raw);
  std::vector<std::vector<int>> perms;
  std::vector<int> p(k);
  for (int j = 0; j < k; ++j) p[j] = j;
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  std::vector<std::size_t> idx(b, 0);
  std::size_t count = 0, hits = 0;
  while (true) {
    Matrix m(b, k);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = raw(i, perms[idx[i]][j]);
    ++count;
    if (exceeds(stat(m), observed)) ++hits;
    int i = 0;
    while (i < b && ++idx[i] == perms.size()) idx[i++] = 0;
    if (i == b) break;
  }
  return static_cast<double>(hits) / static_cast<double>(count);
}

}  // namespace

TEST(FStatistic, MatchesTextbookAnova) {
  for (int b : {2, 5, 10}) {
    for (int k : {2, 3, 5}) {
      RngStream rng(static_cast<std::uint64_t>(100 * b + k), 0);
      Matrix raw = oracle::random_matrix(b, k, rng, 1);
      raw.col(0).array() += 3.0;
      const double f = f_statistic(make_design(raw));
      EXPECT_NEAR(f, oracle::anova_f(raw), 1e-10 * oracle::anova_f(raw));
    }
  }
}

TEST(FStatistic, ZeroErrorIsDegenerate) {
  Matrix raw(3, 3);
  raw << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  EXPECT_THROW(f_statistic(make_design(raw)), DegenerateDesign);
}

TEST(UToF, TableAnchors) {
  EXPECT_DOUBLE_EQ(u_to_f(1.2, 10, 4), 4.8);
  EXPECT_DOUBLE_EQ(u_to_f(1.0, 5, 3), 2.5);
  EXPECT_NEAR(u_to_f(0.6, 5, 3), 0.9, 1e-15);
  EXPECT_NEAR(f_survival(u_to_f(1.2, 10, 4), 3, 27), 0.0083, 5e-5);
  EXPECT_NEAR(f_survival(u_to_f(1.0, 5, 3), 2, 8), 0.1434, 5e-5);
  EXPECT_NEAR(f_survival(u_to_f(0.6, 5, 3), 2, 8), 0.4441, 5e-5);
  EXPECT_THROW(u_to_f(0.0, 5, 3), ContractViolation);
}

TEST(Exceeds, TieTolerance) {
  EXPECT_TRUE(exceeds(1.0, 1.0));
  EXPECT_TRUE(exceeds(1.0 - 1e-12, 1.0));
  EXPECT_FALSE(exceeds(1.0 - 1e-6, 1.0));
  EXPECT_TRUE(exceeds(1e6 - 1e-5, 1e6));
  EXPECT_TRUE(exceeds(std::numeric_limits<double>::infinity(), 5.0));
  EXPECT_FALSE(exceeds(5.0, std::numeric_limits<double>::infinity()));
}

TEST(ExactPValue, MultiplesOfOutcomeCount) {
  const BlockDesign d = random_design(2, 3, 7, 1);
  for (Statistic s : {Statistic::f, Statistic::lambda}) {
    const auto r = exact_pvalue(d, s);
    EXPECT_EQ(r.n_resamples, 36u);
    EXPECT_NEAR(r.p_value * 36, std::round(r.p_value * 36), 1e-12);
    EXPECT_GE(r.exceedances, 1u);
    EXPECT_EQ(r.method, PValueMethod::exact);
  }
}

TEST(ExactPValue, MatchesBruteForce) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    RngStream rng(seed, 0);
    const Matrix raw = oracle::random_matrix(2, 3, rng, static_cast<int>(seed % 3));
    const BlockDesign d = make_design(raw);
    EXPECT_NEAR(exact_pvalue(d, Statistic::f).p_value,
                brute_force_pvalue(raw, [](const Matrix& m) { return oracle::anova_f(m); }), 1e-12);
    EXPECT_NEAR(exact_pvalue(d, Statistic::lambda).p_value,
                brute_force_pvalue(raw, [](const Matrix& m) { return lambda_statistic(make_design(m)); }),
                1e-12);
  }
}

TEST(ExactPValue, ThreeBlocksMatchBruteForce) {
  RngStream rng(9, 0);
  const Matrix raw = oracle::random_matrix(3, 3, rng, 2);
  const BlockDesign d = make_design(raw);
  EXPECT_NEAR(exact_pvalue(d, Statistic::lambda).p_value,
              brute_force_pvalue(raw, [](const Matrix& m) { return lambda_statistic(make_design(m)); }),
              1e-12);
}

TEST(ExactPValue, CapacityLimit) {
  const BlockDesign d = random_design(10, 4, 3);
  EXPECT_THROW(exact_pvalue(d, Statistic::f), CapacityError);
}

TEST(ForEachOutcome, VisitsEveryOutcomeOnce) {
  const BlockDesign d = random_design(3, 3, 5);
  std::size_t n = 0;
  Vector sum = Vector::Zero(3);
  for_each_outcome(d, [&](const Vector& m) {
    ++n;
    sum += m;
  });
  EXPECT_EQ(n, 216u);
  EXPECT_LT(sum.norm(), 1e-10);
}

TEST(McPValue, AddOneEstimator) {
  const BlockDesign d = random_design(5, 3, 11, 1);
  const auto r = mc_pvalue(d, Statistic::f, 999, 42);
  EXPECT_EQ(r.n_resamples, 999u);
  EXPECT_DOUBLE_EQ(r.p_value, (1.0 + static_cast<double>(r.exceedances)) / 1000.0);
  EXPECT_GT(r.mc_standard_error, 0.0);
  EXPECT_EQ(r.seed, 42u);
}

TEST(McPValue, ThreadCountDoesNotChangeResults) {
  const BlockDesign d = random_design(6, 4, 12, 2);
  for (Statistic s : {Statistic::f, Statistic::lambda}) {
    const auto a = mc_pvalue(d, s, 5000, 3, 1);
    const auto b = mc_pvalue(d, s, 5000, 3, 4);
    EXPECT_EQ(a.exceedances, b.exceedances);
    EXPECT_EQ(a.p_value, b.p_value);
  }
  const auto x = draw_resamples(d, 5000, 8, {true, true, 1});
  const auto y = draw_resamples(d, 5000, 8, {true, true, 3});
  EXPECT_EQ(x.f, y.f);
  EXPECT_EQ(x.lambda, y.lambda);
}

TEST(McPValue, SeedChangesDraws) {
  const BlockDesign d = random_design(6, 3, 13);
  EXPECT_NE(draw_resamples(d, 100, 1).f, draw_resamples(d, 100, 2).f);
}

TEST(McPValue, AgreesWithExact) {
  const BlockDesign d = random_design(2, 3, 14, 1);
  for (Statistic s : {Statistic::f, Statistic::lambda}) {
    const double exact = exact_pvalue(d, s).p_value;
    const auto mc = mc_pvalue(d, s, 20000, 5);
    EXPECT_NEAR(mc.p_value, exact, 4 * std::sqrt(exact * (1 - exact) / 20000) + 1e-4);
  }
}

TEST(Statistics, InvariantUnderRowPermutationAndShift) {
  RngStream rng(15, 0);
  Matrix raw = oracle::random_matrix(5, 4, rng, 1);
  Matrix swapped = raw;
  swapped.row(0).swap(swapped.row(3));
  Matrix shifted = raw;
  shifted.row(2).array() += 7.0;
  const BlockDesign d = make_design(raw);
  for (const Matrix& m : {swapped, shifted}) {
    EXPECT_NEAR(f_statistic(make_design(m)), f_statistic(d), 1e-10);
    EXPECT_NEAR(lambda_statistic(make_design(m)), lambda_statistic(d), 1e-9);
  }
}

TEST(Statistics, FOrderingFollowsTreatmentSumOfSquares) {
  // Within a permutation distribution the total SS is fixed, so F is monotone in SSTr.
  const BlockDesign d = random_design(3, 3, 16);
  const double b = 3;
  std::vector<std::pair<double, double>> pairs;
  const double total = d.values().squaredNorm();
  for_each_outcome(d, [&](const Vector& m) {
    const double sstr = b * m.squaredNorm();
    if (total - sstr > 1e-9) pairs.emplace_back(sstr, sstr / (total - sstr));
  });
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) EXPECT_LE(pairs[i - 1].second, pairs[i].second + 1e-12);
}

TEST(TailTable, RowsAndDeterminism) {
  const BlockDesign d = random_design(10, 3, 17, 2);
  TailTableConfig cfg;
  cfg.n_mc = 4000;
  cfg.seed = 9;
  cfg.tail.sphere_samples = 20;
  const std::vector<double> grid{0.6, 1.0};
  const DesignLevelSet p(sort_design(d));
  cfg.problem = &p;
  const TailTable a = tail_table(d, grid, cfg);
  cfg.threads = 3;
  const TailTable b = tail_table(d, grid, cfg);
  ASSERT_EQ(a.cells.size(), static_cast<std::size_t>(kTailRowCount));
  for (int row = 0; row < kTailRowCount; ++row) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      ASSERT_TRUE(a.cells[row][j].value.has_value()) << tail_row_name(row);
      EXPECT_EQ(*a.cells[row][j].value, *b.cells[row][j].value);
      EXPECT_GE(*a.cells[row][j].value, 0.0);
      EXPECT_LE(*a.cells[row][j].value, 1.0);
    }
  }
  EXPECT_NEAR(*a.cells[kRowF][0].value, f_survival(u_to_f(0.6, 10, 3), 2, 18), 1e-14);
  EXPECT_GE(*a.cells[kRowMcLambda][0].value, *a.cells[kRowMcLambda][1].value);
}

TEST(TailTable, DefaultsToTheDesignCgf) {
  const BlockDesign d = random_design(5, 3, 18);
  TailTableConfig cfg;
  cfg.n_mc = 100;
  cfg.tail.sphere_samples = 10;
  const TailTable t = tail_table(d, {0.5}, cfg);
  EXPECT_TRUE(t.cells[kRowMcF][0].value.has_value());
  EXPECT_TRUE(t.cells[kRowSpLr][0].value.has_value());
  EXPECT_THROW(tail_table(d, {-0.5}, cfg), ValidationError);
}
