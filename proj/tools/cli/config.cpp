#include "cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <tiltperm/errors.hpp>

#include "cli/report.hpp"

namespace tiltperm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) throw ValidationError(what + ": not a number: '" + text + "'");
  return v;
}

std::uint64_t parse_count(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(what + ": not a non-negative integer: '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError(what + ": expected true or false, got '" + text + "'");
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_real(v[i]);
  }
  return out;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), what));
  if (out.empty()) throw ValidationError(what + ": empty list");
  return out;
}

KeyValues parse_key_values(std::istream& in, const std::string& origin) {
  KeyValues kv;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !kv.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ValidationError(origin + ":" + std::to_string(number) + ": empty or repeated key '" +
                            key + "'");
    }
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_key_values(in, path);
}

ExperimentConfig experiment_from(const KeyValues& kv) {
  static const std::set<std::string> known = {
      "experiment", "family",      "standardize",    "b",         "k",
      "grid",       "n_mc",        "sphere_samples", "quadrature", "epsilon",
      "n_outer",    "n_inner",     "levels",         "alpha",     "replicates",
      "permutations", "seed"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  if (const auto* v = get("experiment")) {
    if (*v == "accuracy") c.kind = ExperimentKind::accuracy;
    else if (*v == "unconditional") c.kind = ExperimentKind::unconditional;
    else if (*v == "power") c.kind = ExperimentKind::power;
    else throw ValidationError("experiment must be accuracy, unconditional or power");
  }
  ErrorModel model{ErrorFamily::exponential_squared};
  if (const auto* v = get("family")) model = ErrorModel::parse(*v);
  // Power runs compare error families at unit variance.
  model.standardize = c.kind == ExperimentKind::power;
  if (const auto* v = get("standardize")) model.standardize = parse_bool(*v, "standardize");

  int b = 10;
  int k = 4;
  if (const auto* v = get("b")) b = static_cast<int>(parse_count(*v, "b"));
  if (const auto* v = get("k")) k = static_cast<int>(parse_count(*v, "k"));
  if (b < 2 || k < 2 || k > kMaxTreatments) {
    throw ValidationError("need b >= 2 and 2 <= k <= " + std::to_string(kMaxTreatments));
  }
  std::uint64_t seed = 0;
  if (const auto* v = get("seed")) seed = parse_count(*v, "seed");

  auto& a = c.accuracy;
  a.model = model;
  a.b = b;
  a.k = k;
  a.seed = seed;
  if (const auto* v = get("grid")) a.grid = parse_real_list(*v, "grid");
  if (const auto* v = get("n_mc")) a.n_mc = parse_count(*v, "n_mc");
  if (const auto* v = get("sphere_samples")) a.tail.sphere_samples = parse_count(*v, "sphere_samples");
  if (const auto* v = get("quadrature")) a.tail.quadrature = parse_bool(*v, "quadrature");
  if (const auto* v = get("epsilon")) a.tail.epsilon = parse_real(*v, "epsilon");
  if (const auto* v = get("n_outer")) c.n_outer = parse_count(*v, "n_outer");
  if (const auto* v = get("n_inner")) c.n_inner = parse_count(*v, "n_inner");

  auto& p = c.power;
  p.model = model;
  p.b = b;
  p.k = k;
  p.seed = seed;
  p.epsilon = a.tail.epsilon;
  p.n_sphere = a.tail.sphere_samples;
  if (const auto* v = get("levels")) p.levels = parse_real_list(*v, "levels");
  if (const auto* v = get("alpha")) p.alpha = parse_real(*v, "alpha");
  if (const auto* v = get("replicates")) p.n_replicates = parse_count(*v, "replicates");
  if (const auto* v = get("permutations")) p.n_perm = parse_count(*v, "permutations");
  return c;
}

KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues kv;
  const auto& a = c.accuracy;
  const auto& p = c.power;
  switch (c.kind) {
    case ExperimentKind::accuracy: kv["experiment"] = "accuracy"; break;
    case ExperimentKind::unconditional: kv["experiment"] = "unconditional"; break;
    case ExperimentKind::power: kv["experiment"] = "power"; break;
  }
  const ErrorModel& m = c.kind == ExperimentKind::power ? p.model : a.model;
  kv["family"] = m.name();
  kv["standardize"] = m.standardize ? "true" : "false";
  kv["b"] = std::to_string(a.b);
  kv["k"] = std::to_string(a.k);
  kv["seed"] = std::to_string(a.seed);
  kv["epsilon"] = format_real(a.tail.epsilon);
  kv["sphere_samples"] = std::to_string(a.tail.sphere_samples);
  if (c.kind == ExperimentKind::power) {
    kv["levels"] = join_reals(p.levels);
    kv["alpha"] = format_real(p.alpha);
    kv["replicates"] = std::to_string(p.n_replicates);
    kv["permutations"] = std::to_string(p.n_perm);
  } else {
    kv["grid"] = join_reals(a.grid);
    if (c.kind == ExperimentKind::accuracy) {
      kv["n_mc"] = std::to_string(a.n_mc);
      kv["quadrature"] = a.tail.quadrature ? "true" : "false";
    } else {
      kv["n_outer"] = std::to_string(c.n_outer);
      kv["n_inner"] = std::to_string(c.n_inner);
    }
  }
  return kv;
}

}  // namespace tiltperm::cli
