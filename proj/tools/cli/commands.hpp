#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cli/report.hpp"

namespace tiltperm::cli {

struct CommonOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_csv;            // empty: no CSV
  std::vector<std::string> echo;  // command line, minus scheduling flags
};

struct TestOptions {
  std::string input;
  std::vector<std::string> methods{"lr"};
  std::size_t reps = 10000;
  std::size_t sphere_samples = 100;
  bool quadrature = false;
  double epsilon = kDefaultEpsilon;
};

struct TailOptionsCli {
  std::string input;
  std::vector<double> grid{0.6, 0.8, 1.0, 1.2, 1.4};
  std::size_t reps = 100000;
  std::size_t sphere_samples = 100;
  bool quadrature = false;
  double epsilon = kDefaultEpsilon;
};

struct ExperimentOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  bool progress = true;
};

struct DomainOptions {
  std::string input;
  std::optional<std::vector<double>> point;
};

/// Each command returns the full JSON report; CSV (when requested) is
/// written as a side effect.
Json run_test(const TestOptions& o, const CommonOptions& c);
Json run_tail(const TailOptionsCli& o, const CommonOptions& c);
Json run_experiment(const ExperimentOptions& o, CommonOptions c, const char* expected);
Json run_domain(const DomainOptions& o, const CommonOptions& c);

}  // namespace tiltperm::cli
