#include <chrono>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tiltperm/errors.hpp>
#include <tiltperm/parallel.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInput = 2, kCapacity = 3, kNumerical = 4 };

// The echo leaves out flags that affect scheduling or reporting only, so
// reruns at any thread count produce identical reports.
std::vector<std::string> echo_arguments(int argc, char** argv) {
  std::vector<std::string> out{"tiltperm"};
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" || a == "-j") {
      ++i;
      continue;
    }
    if (a.rfind("--threads=", 0) == 0 || a == "--timing" || a == "--quiet") continue;
    out.push_back(a);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace tiltperm;
  using namespace tiltperm::cli;

  CLI::App app{"Permutation tests for complete block designs with saddlepoint tail approximations"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions common;
  common.threads = default_thread_count();
  bool timing = false;
  bool quiet = false;
  app.add_option("-j,--threads", common.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timing", timing, "Include wall time in the JSON report");
  app.add_flag("--quiet", quiet, "No progress messages on stderr");

  TestOptions test;
  std::string test_methods = "lr";
  auto* cmd_test = app.add_subcommand("test", "Test a design for treatment effects");
  cmd_test->add_option("input", test.input, "Design CSV (one row per block)")->required();
  cmd_test->add_option("--method", test_methods,
                       "Comma-separated: lr, bn, mc-lambda, mc-f, exact");
  cmd_test->add_option("--reps", test.reps, "Monte Carlo resamples")->check(CLI::PositiveNumber);
  cmd_test->add_option("--sphere-samples", test.sphere_samples, "Monte Carlo sphere directions");
  cmd_test->add_flag("--quadrature", test.quadrature, "Deterministic sphere rule");
  cmd_test->add_option("--epsilon", test.epsilon, "Admissibility margin");
  cmd_test->add_option("--seed", common.seed, "Master seed");

  TailOptionsCli tail;
  std::string grid_text;
  std::vector<double> single_u;
  std::string tail_csv;
  auto* cmd_tail = app.add_subcommand("tail", "Tail probabilities over a threshold grid");
  cmd_tail->add_option("input", tail.input, "Design CSV")->required();
  cmd_tail->add_option("--u-grid", grid_text, "Comma-separated thresholds");
  cmd_tail->add_option("--u", single_u, "Threshold (repeatable)");
  cmd_tail->add_option("--reps", tail.reps, "Monte Carlo resamples");
  cmd_tail->add_option("--sphere-samples", tail.sphere_samples, "Monte Carlo sphere directions");
  cmd_tail->add_flag("--quadrature", tail.quadrature, "Deterministic sphere rule");
  cmd_tail->add_option("--epsilon", tail.epsilon, "Admissibility margin");
  cmd_tail->add_option("--seed", common.seed, "Master seed");
  cmd_tail->add_option("--out-csv", tail_csv, "Also write the table as CSV");

  ExperimentOptions acc;
  std::uint64_t acc_seed = 0;
  std::size_t acc_reps = 0;
  std::string acc_csv;
  auto* cmd_acc = app.add_subcommand("accuracy", "Accuracy experiment from a config file");
  cmd_acc->add_option("--config", acc.config_path, "Key-value config file")->required();
  auto* acc_seed_opt = cmd_acc->add_option("--seed", acc_seed, "Master seed (overrides config)");
  auto* acc_reps_opt = cmd_acc->add_option("--replicates", acc_reps,
                                           "Resamples (accuracy) or designs (unconditional)");
  cmd_acc->add_option("--out-csv", acc_csv, "Also write the table as CSV");

  ExperimentOptions pow;
  std::uint64_t pow_seed = 0;
  std::size_t pow_reps = 0;
  std::string pow_csv;
  auto* cmd_pow = app.add_subcommand("power", "Power experiment from a config file");
  cmd_pow->add_option("--config", pow.config_path, "Key-value config file")->required();
  auto* pow_seed_opt = cmd_pow->add_option("--seed", pow_seed, "Master seed (overrides config)");
  auto* pow_reps_opt = cmd_pow->add_option("--replicates", pow_reps, "Replicates per effect level");
  cmd_pow->add_option("--out-csv", pow_csv, "Also write the table as CSV");

  DomainOptions dom;
  std::string point_text;
  auto* cmd_dom = app.add_subcommand("domain", "Facets and vertices of the admissible polytope");
  cmd_dom->add_option("input", dom.input, "Design CSV")->required();
  auto* point_opt = cmd_dom->add_option("--point", point_text, "x_1,...,x_{k-1}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  common.echo = echo_arguments(argc, argv);
  const auto start = std::chrono::steady_clock::now();
  try {
    Json out;
    if (cmd_test->parsed()) {
      test.methods.clear();
      std::stringstream ss(test_methods);
      for (std::string m; std::getline(ss, m, ',');) {
        if (!m.empty()) test.methods.push_back(m);
      }
      out = run_test(test, common);
    } else if (cmd_tail->parsed()) {
      if (!single_u.empty()) {
        tail.grid = single_u;
      } else if (!grid_text.empty()) {
        tail.grid = parse_real_list(grid_text, "--u-grid");
      }
      common.out_csv = tail_csv;
      out = run_tail(tail, common);
    } else if (cmd_acc->parsed()) {
      if (*acc_seed_opt) acc.seed = acc_seed;
      if (*acc_reps_opt) acc.replicates = acc_reps;
      acc.progress = !quiet;
      common.out_csv = acc_csv;
      out = run_experiment(acc, common, "accuracy");
    } else if (cmd_pow->parsed()) {
      if (*pow_seed_opt) pow.seed = pow_seed;
      if (*pow_reps_opt) pow.replicates = pow_reps;
      pow.progress = !quiet;
      common.out_csv = pow_csv;
      out = run_experiment(pow, common, "power");
    } else if (cmd_dom->parsed()) {
      if (*point_opt) dom.point = parse_real_list(point_text, "--point");
      out = run_domain(dom, common);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (timing) out["wall_time_seconds"] = seconds;
    std::cout << out.dump(2) << '\n';
    if (!quiet) std::cerr << "wall time " << seconds << " s\n";
    return kOk;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacity;
  } catch (const DegenerateDesign& e) {
    std::cerr << "numerical degeneracy: " << e.what() << '\n';
    return kNumerical;
  } catch (const NumericalDegeneracy& e) {
    std::cerr << "numerical degeneracy: " << e.what() << '\n';
    return kNumerical;
  } catch (const NearBoundary& e) {
    std::cerr << "numerical degeneracy: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    // Validation, domain and level-set errors are all input problems.
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kFailure;
  }
}
