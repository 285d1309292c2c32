#include "tiltperm/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tiltperm/errors.hpp"
#include "tiltperm/lambda.hpp"
#include "tiltperm/parallel.hpp"
#include "tiltperm/random.hpp"

namespace tiltperm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// F from the full column-mean vector; total is the (permutation-invariant)
// total sum of squares of the centered design.
double f_from_means(const Vector& means, double total, double b, int k) {
  const double sstr = b * means.squaredNorm();
  const double sse = total - sstr;
  if (sse <= 1e-12 * total) return kInf;
  return (sstr / (k - 1)) / (sse / ((b - 1.0) * (k - 1)));
}

}  // namespace

const char* to_string(Statistic s) noexcept { return s == Statistic::f ? "F" : "Lambda"; }

const char* to_string(PValueMethod m) noexcept {
  return m == PValueMethod::exact ? "exact" : "monte_carlo";
}

double f_statistic(const BlockDesign& d) {
  const Matrix& x = d.values();
  const double b = static_cast<double>(x.rows());
  const int k = static_cast<int>(x.cols());
  const Vector means = x.colwise().mean().transpose();
  const double total = x.squaredNorm();
  const double sstr = b * means.squaredNorm();
  const double sse = total - sstr;
  if (!(sse > 1e-12 * total)) {
    throw DegenerateDesign("F statistic undefined: error sum of squares is zero");
  }
  return (sstr / (k - 1)) / (sse / ((b - 1.0) * (k - 1)));
}

double lambda_statistic(const BlockDesign& d) { return lambda_at(sort_design(d), reduced_means(d)); }

double u_to_f(double u, double b, int k) {
  if (!(u > 0.0)) throw ContractViolation("u_to_f: u must be positive");
  return b * u * u / (k - 1);
}

ResampleDraws draw_resamples(const BlockDesign& d, std::size_t n, std::uint64_t seed,
                             const ResampleOptions& options) {
  const Matrix& x = d.values();
  const Eigen::Index b = x.rows();
  const int k = static_cast<int>(x.cols());
  const PermutationSet& perms = cached_permutations(k);
  const double total = x.squaredNorm();
  const std::uint64_t stream_seed = derive_seed(seed, "permtest.resample");

  std::optional<LambdaSolver> solver;
  if (options.lambda) solver.emplace(sort_design(d));

  ResampleDraws out;
  if (options.f) out.f.assign(n, 0.0);
  if (options.lambda) out.lambda.assign(n, 0.0);
  const std::size_t n_chunks = chunk_count(n);
  std::vector<std::size_t> failures(n_chunks, 0);

  for_each_chunk(n_chunks, std::max(1u, options.threads), [&](std::size_t c) {
    RngStream rng(stream_seed, c);
    Vector sums(k);
    Vector means(k);
    Vector warm = Vector::Zero(k - 1);
    const std::size_t begin = c * kChunkSize;
    const std::size_t end = std::min(n, begin + kChunkSize);
    for (std::size_t i = begin; i < end; ++i) {
      sums.setZero();
      for (Eigen::Index r = 0; r < b; ++r) {
        const auto pi = perms.full(rng.index(perms.size()));
        for (int j = 0; j < k; ++j) sums[j] += x(r, pi[static_cast<std::size_t>(j)]);
      }
      means = sums / static_cast<double>(b);
      if (options.f) out.f[i] = f_from_means(means, total, static_cast<double>(b), k);
      if (options.lambda) {
        const auto v = solver->evaluate(means.head(k - 1), &warm);
        if (v.route == LambdaRoute::solver_failure) ++failures[c];
        out.lambda[i] = v.value;
      }
    }
  });
  for (auto f : failures) out.solver_failures += f;
  return out;
}

PermutationTestResult mc_pvalue(const BlockDesign& d, Statistic statistic, std::size_t n_resamples,
                                std::uint64_t seed, unsigned threads) {
  if (n_resamples < 1) throw ContractViolation("mc_pvalue: need at least one resample");
  PermutationTestResult res;
  res.statistic = statistic;
  res.method = PValueMethod::monte_carlo;
  res.seed = seed;
  res.n_resamples = n_resamples;
  res.observed = statistic == Statistic::f ? f_statistic(d) : lambda_statistic(d);
  ResampleOptions opt;
  opt.f = statistic == Statistic::f;
  opt.lambda = statistic == Statistic::lambda;
  opt.threads = threads;
  const auto draws = draw_resamples(d, n_resamples, seed, opt);
  const auto& values = statistic == Statistic::f ? draws.f : draws.lambda;
  for (double v : values) {
    if (exceeds(v, res.observed)) ++res.exceedances;
  }
  res.solver_failures = draws.solver_failures;
  const double n = static_cast<double>(n_resamples);
  res.p_value = (static_cast<double>(res.exceedances) + 1.0) / (n + 1.0);
  const double q = static_cast<double>(res.exceedances) / n;
  res.mc_standard_error = std::sqrt(q * (1.0 - q) / n);
  return res;
}

void for_each_outcome(const BlockDesign& d, const std::function<void(const Vector&)>& visit) {
  const Matrix& x = d.values();
  const Eigen::Index b = x.rows();
  const int k = static_cast<int>(x.cols());
  const PermutationSet& perms = cached_permutations(k);
  const double log_count = static_cast<double>(b) * std::log(static_cast<double>(perms.size()));
  if (log_count > std::log(kExactCapacity) + 1e-12) {
    throw CapacityError("exact enumeration needs (k!)^b = " + std::to_string(perms.size()) + "^" +
                        std::to_string(b) + " outcomes, above the limit of 10^7");
  }
  std::vector<std::size_t> digit(static_cast<std::size_t>(b), 0);
  Vector means(k);
  while (true) {
    means.setZero();
    for (Eigen::Index r = 0; r < b; ++r) {
      const auto pi = perms.full(digit[static_cast<std::size_t>(r)]);
      for (int j = 0; j < k; ++j) means[j] += x(r, pi[static_cast<std::size_t>(j)]);
    }
    means /= static_cast<double>(b);
    visit(means);
    std::size_t r = 0;
    while (r < digit.size() && ++digit[r] == perms.size()) digit[r++] = 0;
    if (r == digit.size()) break;
  }
}

PermutationTestResult exact_pvalue(const BlockDesign& d, Statistic statistic) {
  PermutationTestResult res;
  res.statistic = statistic;
  res.method = PValueMethod::exact;
  res.observed = statistic == Statistic::f ? f_statistic(d) : lambda_statistic(d);
  const Matrix& x = d.values();
  const double b = static_cast<double>(x.rows());
  const int k = static_cast<int>(x.cols());
  const double total = x.squaredNorm();
  std::optional<LambdaSolver> solver;
  if (statistic == Statistic::lambda) solver.emplace(sort_design(d));
  Vector warm = Vector::Zero(k - 1);
  for_each_outcome(d, [&](const Vector& means) {
    double v = 0.0;
    if (statistic == Statistic::f) {
      v = f_from_means(means, total, b, k);
    } else {
      const auto lv = solver->evaluate(means.head(k - 1), &warm);
      if (lv.route == LambdaRoute::solver_failure) ++res.solver_failures;
      v = lv.value;
    }
    ++res.n_resamples;
    if (exceeds(v, res.observed)) ++res.exceedances;
  });
  res.p_value = static_cast<double>(res.exceedances) / static_cast<double>(res.n_resamples);
  return res;
}

const char* tail_row_name(int row) noexcept {
  switch (row) {
    case kRowMcF: return "MC F";
    case kRowF: return "F";
    case kRowMcLambda: return "MC Lambda";
    case kRowSpLr: return "SP LR";
    case kRowSpBn: return "SP BN";
    default: return "?";
  }
}

TailTable tail_table(const BlockDesign& d, const std::vector<double>& grid,
                     const TailTableConfig& config) {
  const double b = static_cast<double>(d.blocks());
  const int k = static_cast<int>(d.treatments());
  for (double u : grid) {
    if (!(u > 0.0) || !std::isfinite(u)) throw ValidationError("threshold grid values must be positive");
  }
  TailTable table;
  table.u = grid;
  table.n_mc = config.n_mc;
  table.cells.assign(kTailRowCount, std::vector<TableCell>(grid.size()));
  table.g.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  table.g_se.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());

  ResampleOptions opt;
  opt.threads = config.threads;
  const auto draws =
      config.n_mc > 0 ? draw_resamples(d, config.n_mc, config.seed, opt) : ResampleDraws{};
  table.solver_failures = draws.solver_failures;
  const double n = static_cast<double>(config.n_mc);

  auto proportion = [&](const std::vector<double>& values, double threshold) {
    TableCell cell;
    if (values.empty()) {
      cell.note = "no resamples";
      return cell;
    }
    std::size_t count = 0;
    for (double v : values) {
      if (exceeds(v, threshold)) ++count;
    }
    const double p = static_cast<double>(count) / n;
    cell.value = p;
    cell.standard_error = std::sqrt(p * (1.0 - p) / n);
    return cell;
  };

  std::optional<DesignLevelSet> own;
  std::string problem_error;
  const LevelSetProblem* problem = config.problem;
  if (problem == nullptr) {
    try {
      own.emplace(sort_design(d));
      problem = &*own;
    } catch (const Error& e) {
      problem_error = e.what();
    }
  }
  const std::uint64_t sphere_seed = derive_seed(config.seed, "tail.sphere");

  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double u = grid[j];
    const double f_threshold = u_to_f(u, b, k);
    table.cells[kRowMcF][j] = proportion(draws.f, f_threshold);
    table.cells[kRowF][j].value = f_survival(f_threshold, k - 1, (k - 1) * static_cast<int>(b - 1));
    table.cells[kRowMcLambda][j] = proportion(draws.lambda, 0.5 * u * u);
    if (problem == nullptr) {
      table.cells[kRowSpLr][j].note = problem_error;
      table.cells[kRowSpBn][j].note = problem_error;
      continue;
    }
    try {
      RngStream rng(sphere_seed, j);
      const auto t = approximate_tail(*problem, u, config.tail, rng);
      table.g[j] = t.g;
      table.g_se[j] = t.g_se;
      table.cells[kRowSpLr][j] = {t.p_lr, t.se_lr, t.lr_clamped ? "clamped" : ""};
      table.cells[kRowSpBn][j] = {t.p_bn, t.se_bn, ""};
      if (t.lr_clamped) ++table.clamp_count;
    } catch (const Error& e) {
      table.cells[kRowSpLr][j].note = e.what();
      table.cells[kRowSpBn][j].note = e.what();
    }
  }
  return table;
}

}  // namespace tiltperm
