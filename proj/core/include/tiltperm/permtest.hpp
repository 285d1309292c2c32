#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tiltperm/design.hpp"
#include "tiltperm/tail.hpp"

namespace tiltperm {

enum class Statistic { lambda, f };
enum class PValueMethod { exact, monte_carlo };

const char* to_string(Statistic s) noexcept;
const char* to_string(PValueMethod m) noexcept;

/// Treatment mean square over error mean square. Throws DegenerateDesign when
/// the error sum of squares is not positive.
double f_statistic(const BlockDesign& d);

/// Lambda at the observed treatment means, given the sorted design.
double lambda_statistic(const BlockDesign& d);

/// F threshold corresponding to the level u: b u^2 / (k - 1).
double u_to_f(double u, double b, int k);

/// Exceedance rule shared by every p-value and tail proportion: ties at the
/// threshold (to 1e-9 relative) count.
inline bool exceeds(double value, double threshold) {
  if (value >= threshold) return true;
  const double scale = threshold < 0.0 ? -threshold : threshold;
  return value >= threshold - 1e-9 * (scale > 1.0 ? scale : 1.0);
}

struct PermutationTestResult {
  Statistic statistic = Statistic::lambda;
  PValueMethod method = PValueMethod::monte_carlo;
  double observed = 0.0;
  double p_value = 1.0;
  std::size_t n_resamples = 0;
  std::size_t exceedances = 0;
  std::uint64_t seed = 0;
  double mc_standard_error = 0.0;
  std::size_t solver_failures = 0;  // Lambda resamples with no finite value
};

struct ResampleOptions {
  bool f = true;
  bool lambda = true;
  unsigned threads = 1;
};

/// Statistics of n within-block random permutations of the centered rows.
/// Resample i is a function of (seed, i) alone: the draws do not depend on
/// which statistics are requested or on the thread count.
struct ResampleDraws {
  std::vector<double> f;
  std::vector<double> lambda;
  std::size_t solver_failures = 0;
};

ResampleDraws draw_resamples(const BlockDesign& d, std::size_t n, std::uint64_t seed,
                             const ResampleOptions& options = {});

/// Add-one estimator (count + 1) / (n + 1).
PermutationTestResult mc_pvalue(const BlockDesign& d, Statistic statistic, std::size_t n_resamples,
                                std::uint64_t seed, unsigned threads = 1);

constexpr double kExactCapacity = 1e7;

/// Calls visit(column means, all k entries) once for each of the (k!)^b
/// equally likely within-block permutations. Throws CapacityError above
/// kExactCapacity.
void for_each_outcome(const BlockDesign& d, const std::function<void(const Vector&)>& visit);

/// Plain proportion over the full enumeration.
PermutationTestResult exact_pvalue(const BlockDesign& d, Statistic statistic);

struct TableCell {
  std::optional<double> value;  // empty when unavailable
  double standard_error = 0.0;
  std::string note;
};

struct TailTableConfig {
  std::size_t n_mc = 100000;
  std::uint64_t seed = 0;
  TailOptions tail;
  unsigned threads = 1;
  /// Replaces the design's own CGF in the saddlepoint rows when set.
  const LevelSetProblem* problem = nullptr;
};

/// Rows of a threshold table, in order.
enum TailRow { kRowMcF = 0, kRowF, kRowMcLambda, kRowSpLr, kRowSpBn, kTailRowCount };

const char* tail_row_name(int row) noexcept;

struct TailTable {
  std::vector<double> u;
  std::vector<std::vector<TableCell>> cells;  // [row][u index]
  std::vector<double> g;                      // G(u), NaN where unavailable
  std::vector<double> g_se;
  std::size_t n_mc = 0;
  std::size_t solver_failures = 0;
  std::size_t clamp_count = 0;
};

/// Per u: the resample proportion with F >= u_to_f(u), the F-distribution
/// tail there, the resample proportion with Lambda >= u^2/2, and the two
/// saddlepoint tails.
TailTable tail_table(const BlockDesign& d, const std::vector<double>& grid,
                     const TailTableConfig& config);

}  // namespace tiltperm
