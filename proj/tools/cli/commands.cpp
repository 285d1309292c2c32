#include "cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <tiltperm/errors.hpp>
#include <tiltperm/lambda.hpp>

#include "cli/config.hpp"

namespace tiltperm::cli {

namespace {

Json report(const CommonOptions& c, Json config, Json results, Json diagnostics,
            const std::vector<std::string>& warnings) {
  Json out;
  out["command"] = c.echo;
  out["config"] = std::move(config);
  out["seed"] = c.seed;
  out["results"] = std::move(results);
  out["diagnostics"] = std::move(diagnostics);
  out["warnings"] = warnings;
  return out;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write CSV file '" + path + "'");
  return out;
}

Json design_json(const BlockDesign& d) {
  return {{"blocks", d.blocks()}, {"treatments", d.treatments()}};
}

const char* location_name(Location l) {
  switch (l) {
    case Location::interior: return "interior";
    case Location::boundary: return "boundary";
    case Location::vertex: return "vertex";
    case Location::exterior: return "exterior";
  }
  return "?";
}

const char* route_name(LambdaRoute r) {
  switch (r) {
    case LambdaRoute::interior: return "interior";
    case LambdaRoute::boundary: return "boundary";
    case LambdaRoute::vertex: return "vertex";
    case LambdaRoute::exterior: return "exterior";
    case LambdaRoute::solver_failure: return "solver_failure";
  }
  return "?";
}

Json face_json(const Face& f) {
  Json subset = Json::array();
  for (int j = 0; j < 32; ++j) {
    if (f.subset & (1u << j)) subset.push_back(j + 1);
  }
  return {{"subset", subset},
          {"l", f.size},
          {"side", f.side == FaceSide::lower ? "lower" : "upper"},
          {"bound", real_json(f.bound)}};
}

}  // namespace

Json run_test(const TestOptions& o, const CommonOptions& c) {
  const BlockDesign d = read_design_csv_file(o.input);
  std::vector<std::string> warnings;
  Json results;
  results["design"] = design_json(d);

  std::optional<double> f_obs;
  try {
    f_obs = f_statistic(d);
  } catch (const DegenerateDesign& e) {
    warnings.emplace_back(e.what());
  }
  const double lambda_obs = lambda_statistic(d);
  results["observed"] = {{"lambda", real_json(lambda_obs)},
                         {"u", real_json(std::sqrt(2.0 * lambda_obs))},
                         {"f", f_obs ? real_json(*f_obs) : Json(nullptr)}};

  std::optional<SaddlepointPValue> sp;
  std::size_t solver_failures = 0;
  Json methods = Json::array();
  for (const auto& m : o.methods) {
    if (m == "lr" || m == "bn") {
      if (!sp) {
        RngStream rng(derive_seed(c.seed, "test.sphere"), 0);
        sp = saddlepoint_pvalue(d, o.sphere_samples, rng, o.epsilon, o.quadrature);
        if (sp->inadmissible) {
          warnings.push_back("observed u is beyond the admissible range; the p-value is the tail at "
                             "the largest admissible u");
        }
      }
      methods.push_back({{"method", m},
                         {"statistic", "Lambda"},
                         {"p_value", real_json(m == "lr" ? sp->p_lr : sp->p_bn)},
                         {"g", real_json(sp->g)},
                         {"g_se", real_json(sp->g_se)},
                         {"inadmissible", sp->inadmissible}});
    } else if (m == "mc-lambda" || m == "mc-f") {
      const Statistic s = m == "mc-f" ? Statistic::f : Statistic::lambda;
      const auto r = mc_pvalue(d, s, o.reps, derive_seed(c.seed, "test.mc"), c.threads);
      solver_failures += r.solver_failures;
      Json j = test_result_json(r);
      j["method"] = m;
      methods.push_back(j);
    } else if (m == "exact") {
      for (Statistic s : {Statistic::lambda, Statistic::f}) {
        if (s == Statistic::f && !f_obs) continue;
        const auto r = exact_pvalue(d, s);
        solver_failures += r.solver_failures;
        Json j = test_result_json(r);
        j["method"] = "exact";
        methods.push_back(j);
      }
    } else {
      throw ValidationError("unknown method '" + m + "' (expected lr, bn, mc-lambda, mc-f, exact)");
    }
  }
  results["p_values"] = methods;

  Json config = {{"input", o.input},         {"methods", o.methods},
                 {"reps", o.reps},           {"sphere_samples", o.sphere_samples},
                 {"quadrature", o.quadrature}, {"epsilon", real_json(o.epsilon)}};
  return report(c, config, results, {{"solver_failures", solver_failures}}, warnings);
}

Json run_tail(const TailOptionsCli& o, const CommonOptions& c) {
  const BlockDesign d = read_design_csv_file(o.input);
  const DesignLevelSet problem(sort_design(d));
  for (double u : o.grid) check_admissible(problem, u, o.epsilon);

  TailTableConfig tc;
  tc.n_mc = o.reps;
  tc.seed = c.seed;
  tc.threads = c.threads;
  tc.tail.epsilon = o.epsilon;
  tc.tail.sphere_samples = o.sphere_samples;
  tc.tail.quadrature = o.quadrature;
  tc.tail.threads = c.threads;
  tc.problem = &problem;
  const TailTable table = tail_table(d, o.grid, tc);
  if (!c.out_csv.empty()) {
    auto out = open_csv(c.out_csv);
    write_tail_table_csv(out, table);
  }
  Json results = tail_table_json(table);
  results["design"] = design_json(d);
  Json config = {{"input", o.input},
                 {"u_grid", o.grid},
                 {"reps", o.reps},
                 {"sphere_samples", o.sphere_samples},
                 {"quadrature", o.quadrature},
                 {"epsilon", real_json(o.epsilon)}};
  Json diagnostics = results["diagnostics"];
  results.erase("diagnostics");
  return report(c, config, results, diagnostics, {});
}

Json run_experiment(const ExperimentOptions& o, CommonOptions c, const char* expected) {
  KeyValues kv = read_key_values(o.config_path);
  if (o.seed) kv["seed"] = std::to_string(*o.seed);
  ExperimentConfig ec = experiment_from(kv);
  const bool is_power = ec.kind == ExperimentKind::power;
  if (is_power != (std::string(expected) == "power")) {
    throw ValidationError("config '" + o.config_path + "' describes a " +
                          (is_power ? "power" : "accuracy") + " experiment; use the '" +
                          (is_power ? "power" : "accuracy") + "' command");
  }
  if (o.replicates) {
    switch (ec.kind) {
      case ExperimentKind::accuracy: ec.accuracy.n_mc = *o.replicates; break;
      case ExperimentKind::unconditional: ec.n_outer = *o.replicates; break;
      case ExperimentKind::power: ec.power.n_replicates = *o.replicates; break;
    }
  }
  c.seed = ec.accuracy.seed;
  ec.accuracy.threads = c.threads;
  ec.power.threads = c.threads;
  if (o.progress) {
    ec.power.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "[power] effect level " << done << "/" << total << " done\n";
    };
  }

  Json config;
  for (const auto& [key, value] : to_key_values(ec)) config[key] = value;
  std::vector<std::string> warnings;
  Json results;
  Json diagnostics = Json::object();
  switch (ec.kind) {
    case ExperimentKind::accuracy: {
      const auto r = accuracy_experiment(ec.accuracy);
      warnings = r.warnings;
      results = tail_table_json(r.table);
      diagnostics = results["diagnostics"];
      results.erase("diagnostics");
      if (!c.out_csv.empty()) {
        auto out = open_csv(c.out_csv);
        write_tail_table_csv(out, r.table);
      }
      break;
    }
    case ExperimentKind::unconditional: {
      const auto r = unconditional_accuracy(ec.accuracy, ec.n_outer, ec.n_inner);
      results = unconditional_json(r);
      if (!c.out_csv.empty()) {
        auto out = open_csv(c.out_csv);
        write_unconditional_csv(out, r);
      }
      break;
    }
    case ExperimentKind::power: {
      const auto r = power_experiment(ec.power);
      results = power_json(r);
      diagnostics = results["diagnostics"];
      results.erase("diagnostics");
      if (!c.out_csv.empty()) {
        auto out = open_csv(c.out_csv);
        write_power_csv(out, r);
      }
      break;
    }
  }
  return report(c, config, results, diagnostics, warnings);
}

Json run_domain(const DomainOptions& o, const CommonOptions& c) {
  const BlockDesign d = read_design_csv_file(o.input);
  const SortedDesign sd = sort_design(d);
  const LambdaSolver solver(sd);
  const int k = static_cast<int>(sd.treatments());

  Json facets = Json::array();
  for (const auto& f : solver.facets()) facets.push_back(face_json(f));
  Json means = Json::array();
  for (Eigen::Index j = 0; j < sd.col_means().size(); ++j) means.push_back(real_json(sd.col_means()[j]));
  Json results = {{"design", design_json(d)},
                  {"sorted_column_means", means},
                  {"facet_count", solver.facets().size()},
                  {"vertex_count", cached_permutations(k).size()},
                  {"vertex_lambda", real_json(std::lgamma(k + 1.0))},
                  {"facets", facets}};
  Json config = {{"input", o.input}};
  if (o.point) {
    Vector x(static_cast<Eigen::Index>(o.point->size()));
    for (std::size_t i = 0; i < o.point->size(); ++i) x[static_cast<Eigen::Index>(i)] = (*o.point)[i];
    if (x.size() != k - 1) {
      throw ValidationError("--point needs k - 1 = " + std::to_string(k - 1) + " coordinates");
    }
    const auto loc = solver.classify(x);
    const auto value = solver.evaluate(x);
    Json active = Json::array();
    for (const auto& f : loc.active) active.push_back(face_json(f));
    Json point = {{"x", *o.point},
                  {"location", location_name(loc.kind)},
                  {"margin", real_json(loc.margin)},
                  {"lambda", real_json(value.value)},
                  {"route", route_name(value.route)},
                  {"active_faces", active}};
    if (loc.kind == Location::vertex) point["vertex_columns"] = loc.vertex;
    results["point"] = point;
    config["point"] = *o.point;
  }
  return report(c, config, results, Json::object(), {});
}

}  // namespace tiltperm::cli
