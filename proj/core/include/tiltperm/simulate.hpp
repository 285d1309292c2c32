#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tiltperm/design.hpp"
#include "tiltperm/permtest.hpp"
#include "tiltperm/random.hpp"

namespace tiltperm {

enum class ErrorFamily { normal, exponential, exponential_squared, uniform, gamma };

struct ErrorModel {
  ErrorFamily family = ErrorFamily::normal;
  double shape = 1.0;        // gamma only
  bool standardize = false;  // subtract the mean and divide by the sd

  /// "normal", "exponential", "exponential_squared", "uniform", "gamma(5)".
  static ErrorModel parse(std::string_view text);
  std::string name() const;

  double mean() const;
  double sd() const;
  double draw(RngStream& rng) const;
};

/// X_ij = e_ij + mu_j with i.i.d. errors, then row-centered.
BlockDesign gen_design(const ErrorModel& model, int b, int k, const Vector& mu, RngStream& rng);

/// (-c, 0, ..., 0, c) of length k.
Vector effect_vector(int k, double c);

/// Effect vector for an effect level L: c = sqrt(L), so the level is c^2.
Vector effect_for_level(int k, double level);

struct AccuracyConfig {
  ErrorModel model{ErrorFamily::exponential_squared};
  int b = 10;
  int k = 4;
  std::vector<double> grid{0.6, 0.8, 1.0, 1.2, 1.4};
  std::size_t n_mc = 100000;
  TailOptions tail;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct AccuracyResult {
  TailTable table;
  std::vector<std::string> warnings;
};

/// One design from the model, then its threshold table.
AccuracyResult accuracy_experiment(const AccuracyConfig& config);

struct UnconditionalResult {
  std::vector<double> u;
  std::vector<double> mean_mc_f;  // average over designs of the MC F tail
  std::vector<double> se;         // across-design standard error
  std::vector<double> f_dist;     // F-distribution tail
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
};

constexpr double kUnconditionalCapacity = 1e10;

/// MC F tail proportions averaged over n_outer independent designs. Design o
/// and its resamples are those accuracy_experiment uses for o = 0.
UnconditionalResult unconditional_accuracy(const AccuracyConfig& config, std::size_t n_outer,
                                           std::size_t n_inner);

struct PowerConfig {
  ErrorModel model{ErrorFamily::exponential, 1.0, true};
  int b = 10;
  int k = 4;
  std::vector<double> levels{0.0, 0.04, 0.16, 0.36, 0.64, 1.0, 1.44, 1.96};
  double alpha = 0.05;
  std::size_t n_replicates = 2000;
  std::size_t n_perm = 10000;
  std::size_t n_sphere = 100;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::function<void(std::size_t level_done, std::size_t levels)> progress;
};

struct PowerRow {
  double level = 0.0;
  double power_f = 0.0;
  double power_lr = 0.0;
  double power_bn = 0.0;
  std::size_t inadmissible = 0;  // observed u beyond the admissible range
  std::size_t failures = 0;      // replicates whose saddlepoint p-value failed
};

struct PowerResult {
  std::vector<PowerRow> rows;
  std::size_t n_replicates = 0;
  double alpha = 0.0;
};

/// Rejection rates at level alpha for the permutation F test and the two
/// saddlepoint Lambda tests. Replicate r uses the same error draws at every
/// effect level.
PowerResult power_experiment(const PowerConfig& config);

/// Saddlepoint p-values of an observed design (u_obs = sqrt(2 Lambda_obs)).
struct SaddlepointPValue {
  double u = 0.0;
  double p_lr = 1.0;
  double p_bn = 1.0;
  double g = 1.0;
  double g_se = 0.0;
  bool inadmissible = false;  // evaluated at the largest admissible u instead
};

SaddlepointPValue saddlepoint_pvalue(const BlockDesign& d, std::size_t n_sphere, RngStream& rng,
                                     double epsilon = kDefaultEpsilon, bool quadrature = false);

}  // namespace tiltperm
