#include "cli/report.hpp"

#include <charconv>
#include <cmath>

namespace tiltperm::cli {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json real_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace {

Json reals(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(real_json(x));
  return a;
}

}  // namespace

Json tail_table_json(const TailTable& t) {
  Json rows = Json::array();
  for (int r = 0; r < kTailRowCount; ++r) {
    Json values = Json::array();
    Json ses = Json::array();
    Json notes = Json::array();
    for (const auto& cell : t.cells[static_cast<std::size_t>(r)]) {
      values.push_back(cell.value ? real_json(*cell.value) : Json(nullptr));
      ses.push_back(real_json(cell.standard_error));
      notes.push_back(cell.note);
    }
    rows.push_back({{"name", tail_row_name(r)}, {"values", values}, {"se", ses}, {"notes", notes}});
  }
  return {{"u", reals(t.u)},
          {"rows", rows},
          {"g", reals(t.g)},
          {"g_se", reals(t.g_se)},
          {"n_mc", t.n_mc},
          {"diagnostics",
           {{"solver_failures", t.solver_failures}, {"clamp_count", t.clamp_count}}}};
}

Json unconditional_json(const UnconditionalResult& r) {
  return {{"u", reals(r.u)},
          {"rows",
           Json::array({{{"name", "E MC F"}, {"values", reals(r.mean_mc_f)}, {"se", reals(r.se)}},
                        {{"name", "F"}, {"values", reals(r.f_dist)}}})},
          {"n_outer", r.n_outer},
          {"n_inner", r.n_inner}};
}

Json power_json(const PowerResult& r) {
  Json levels = Json::array();
  Json pf = Json::array(), plr = Json::array(), pbn = Json::array();
  Json inadm = Json::array(), fails = Json::array();
  for (const auto& row : r.rows) {
    levels.push_back(real_json(row.level));
    pf.push_back(real_json(row.power_f));
    plr.push_back(real_json(row.power_lr));
    pbn.push_back(real_json(row.power_bn));
    inadm.push_back(row.inadmissible);
    fails.push_back(row.failures);
  }
  return {{"sum_mu_sq", levels},
          {"rows",
           Json::array({{{"name", "PowerF"}, {"values", pf}},
                        {{"name", "PowerLR"}, {"values", plr}},
                        {{"name", "PowerBN"}, {"values", pbn}}})},
          {"alpha", real_json(r.alpha)},
          {"n_replicates", r.n_replicates},
          {"diagnostics", {{"inadmissible_observed_u", inadm}, {"saddlepoint_failures", fails}}}};
}

Json test_result_json(const PermutationTestResult& r) {
  return {{"statistic", to_string(r.statistic)},
          {"method", to_string(r.method)},
          {"observed", real_json(r.observed)},
          {"p_value", real_json(r.p_value)},
          {"n_resamples", r.n_resamples},
          {"exceedances", r.exceedances},
          {"mc_standard_error", real_json(r.mc_standard_error)},
          {"solver_failures", r.solver_failures}};
}

void write_tail_table_csv(std::ostream& out, const TailTable& t) {
  out << "row,u,value,se,note\n";
  for (int r = 0; r < kTailRowCount; ++r) {
    for (std::size_t j = 0; j < t.u.size(); ++j) {
      const auto& cell = t.cells[static_cast<std::size_t>(r)][j];
      out << tail_row_name(r) << ',' << format_real(t.u[j]) << ','
          << (cell.value ? format_real(*cell.value) : "") << ',' << format_real(cell.standard_error)
          << ',';
      // Notes may carry commas; quote them.
      if (!cell.note.empty()) {
        out << '"';
        for (char c : cell.note) out << (c == '"' ? "\"\"" : std::string(1, c));
        out << '"';
      }
      out << '\n';
    }
  }
}

void write_unconditional_csv(std::ostream& out, const UnconditionalResult& r) {
  out << "row,u,value,se\n";
  for (std::size_t j = 0; j < r.u.size(); ++j) {
    out << "E MC F," << format_real(r.u[j]) << ',' << format_real(r.mean_mc_f[j]) << ','
        << format_real(r.se[j]) << '\n';
  }
  for (std::size_t j = 0; j < r.u.size(); ++j) {
    out << "F," << format_real(r.u[j]) << ',' << format_real(r.f_dist[j]) << ",0\n";
  }
}

void write_power_csv(std::ostream& out, const PowerResult& r) {
  out << "sum_mu_sq,power_f,power_lr,power_bn,inadmissible,failures\n";
  for (const auto& row : r.rows) {
    out << format_real(row.level) << ',' << format_real(row.power_f) << ','
        << format_real(row.power_lr) << ',' << format_real(row.power_bn) << ',' << row.inadmissible
        << ',' << row.failures << '\n';
  }
}

}  // namespace tiltperm::cli
