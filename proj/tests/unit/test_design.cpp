#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include <tiltperm/design.hpp>
#include <tiltperm/errors.hpp>

#include "support/oracles.hpp"

using namespace tiltperm;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(MakeDesign, CentersRows) {
  const auto d = make_design(rows({{1, 2, 3}, {4, 5, 6}}));
  EXPECT_EQ(d.values(), rows({{-1, 0, 1}, {-1, 0, 1}}));
}

TEST(MakeDesign, CenteringIsIdempotent) {
  const Matrix c = rows({{-1, 0, 1}, {2, -1, -1}});
  EXPECT_EQ(make_design(c).values(), c);
}

TEST(MakeDesign, RandomRowSumsVanish) {
  RngStream rng(4, 0);
  const auto d = make_design(oracle::random_matrix(10, 4, rng, 1));
  EXPECT_LT(d.values().rowwise().sum().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MakeDesign, Rejects) {
  EXPECT_THROW(make_design(rows({{1, 2, 3}})), ValidationError);
  EXPECT_THROW(make_design(rows({{1}, {2}})), ValidationError);
  Matrix bad = rows({{1, 2}, {3, 4}});
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(make_design(bad), ValidationError);
}

TEST(SortDesign, ColumnMeans) {
  const auto a = sort_design(make_design(rows({{0, -1, 1}, {0, -1, 1}})));
  EXPECT_EQ(a.a().row(0), rows({{-1, 0, 1}}).row(0));
  EXPECT_EQ(a.col_means(), Eigen::Vector3d(-1, 0, 1));
  const auto b = sort_design(make_design(rows({{-1, 0, 1}, {-2, 0, 2}})));
  EXPECT_EQ(b.col_means(), Eigen::Vector3d(-1.5, 0, 1.5));
}

TEST(SortDesign, RandomMeansAscendingAndCentered) {
  RngStream rng(8, 0);
  const auto s = sort_design(make_design(oracle::random_matrix(10, 5, rng, 2)));
  for (Eigen::Index j = 1; j < 5; ++j) EXPECT_LE(s.col_means()[j - 1], s.col_means()[j]);
  EXPECT_NEAR(s.col_means().sum(), 0.0, 1e-13);
  EXPECT_NEAR(s.total_ss(), s.a().squaredNorm(), 1e-12);
  EXPECT_DOUBLE_EQ(s.scale(), s.col_means().cwiseAbs().maxCoeff());
}

TEST(SortDesign, ReportsTies) {
  const auto s = sort_design(make_design(rows({{1, 1, 2}, {3, 4, 5}})));
  EXPECT_EQ(s.ties().total(), 1);
}

TEST(ReducedMeans, Examples) {
  const auto d = make_design(rows({{-1, 0, 1}, {-1, 0, 1}}));
  EXPECT_EQ(reduced_means(d), Eigen::Vector2d(-1, 0));
  const auto z = make_design(rows({{5, 5, 5}, {1, 1, 1}}));
  EXPECT_EQ(reduced_means(z), Eigen::Vector2d(0, 0));
  RngStream rng(1, 1);
  const Matrix raw = oracle::random_matrix(6, 4, rng);
  const auto r = make_design(raw);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(reduced_means(r)[j], raw.col(j).mean() - raw.mean(), 1e-14);
  }
}

TEST(EnumeratePi, CountsAndOrder) {
  EXPECT_EQ(enumerate_pi(2).size(), 2u);
  EXPECT_EQ(enumerate_pi(3).size(), 6u);
  const auto p4 = enumerate_pi(4);
  std::set<std::vector<int>> seen;
  for (std::size_t i = 0; i < p4.size(); ++i) {
    const auto f = p4.full(i);
    seen.insert(std::vector<int>(f.begin(), f.end()));
    EXPECT_EQ(p4.element(i).size(), 3u);
  }
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  EXPECT_EQ(p4.full(0)[0], 0);
  EXPECT_THROW(enumerate_pi(11), CapacityError);
  EXPECT_EQ(&cached_permutations(4), &cached_permutations(4));
}

TEST(ReadCsv, HeaderAndValues) {
  std::istringstream in("t1,t2,t3\n1,2,3\n+4.5,5e0,-6\n");
  const auto d = read_design_csv(in);
  EXPECT_EQ(d.blocks(), 2);
  EXPECT_EQ(d.treatments(), 3);
  EXPECT_NEAR(d.values()(1, 0), 4.5 - 3.5 / 3.0, 1e-14);
}

TEST(ReadCsv, ReportsRowAndColumn) {
  std::istringstream in("1,2,3\n4,oops,6\n");
  try {
    read_design_csv(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), 2);
  }
  std::istringstream ragged("1,2,3\n4,5\n");
  EXPECT_THROW(read_design_csv(ragged), ParseError);
  std::istringstream one("1,2,3\n");
  EXPECT_THROW(read_design_csv(one), ValidationError);
}
