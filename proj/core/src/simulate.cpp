#include "tiltperm/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "tiltperm/errors.hpp"
#include "tiltperm/lambda.hpp"
#include "tiltperm/parallel.hpp"

namespace tiltperm {

ErrorModel ErrorModel::parse(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  ErrorModel m;
  if (s == "normal") {
    m.family = ErrorFamily::normal;
  } else if (s == "exponential") {
    m.family = ErrorFamily::exponential;
  } else if (s == "exponential_squared" || s == "exponential-squared") {
    m.family = ErrorFamily::exponential_squared;
  } else if (s == "uniform") {
    m.family = ErrorFamily::uniform;
  } else if (s.rfind("gamma(", 0) == 0 && s.back() == ')') {
    m.family = ErrorFamily::gamma;
    const std::string arg = s.substr(6, s.size() - 7);
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), m.shape);
    if (ec != std::errc{} || ptr != arg.data() + arg.size() || !(m.shape > 0.0)) {
      throw ValidationError("gamma shape must be a positive number: '" + std::string(text) + "'");
    }
  } else {
    throw ValidationError("unknown error family '" + std::string(text) +
                          "' (expected normal, exponential, exponential_squared, uniform, "
                          "gamma(shape))");
  }
  return m;
}

std::string ErrorModel::name() const {
  switch (family) {
    case ErrorFamily::normal: return "normal";
    case ErrorFamily::exponential: return "exponential";
    case ErrorFamily::exponential_squared: return "exponential_squared";
    case ErrorFamily::uniform: return "uniform";
    case ErrorFamily::gamma: {
      std::ostringstream os;
      os << "gamma(" << shape << ")";
      return os.str();
    }
  }
  return "?";
}

double ErrorModel::mean() const {
  switch (family) {
    case ErrorFamily::normal: return 0.0;
    case ErrorFamily::exponential: return 1.0;
    case ErrorFamily::exponential_squared: return 2.0;
    case ErrorFamily::uniform: return 0.5;
    case ErrorFamily::gamma: return shape;
  }
  return 0.0;
}

double ErrorModel::sd() const {
  switch (family) {
    case ErrorFamily::normal: return 1.0;
    case ErrorFamily::exponential: return 1.0;
    case ErrorFamily::exponential_squared: return std::sqrt(20.0);  // E X^4 - (E X^2)^2 = 24 - 4
    case ErrorFamily::uniform: return std::sqrt(1.0 / 12.0);
    case ErrorFamily::gamma: return std::sqrt(shape);
  }
  return 1.0;
}

double ErrorModel::draw(RngStream& rng) const {
  double e = 0.0;
  switch (family) {
    case ErrorFamily::normal: e = rng.normal(); break;
    case ErrorFamily::exponential: e = rng.exponential(); break;
    case ErrorFamily::exponential_squared: {
      const double x = rng.exponential();
      e = x * x;
      break;
    }
    case ErrorFamily::uniform: e = rng.uniform(); break;
    case ErrorFamily::gamma: e = rng.gamma(shape); break;
  }
  return standardize ? (e - mean()) / sd() : e;
}

BlockDesign gen_design(const ErrorModel& model, int b, int k, const Vector& mu, RngStream& rng) {
  if (b < 2 || k < 2) throw ValidationError("gen_design: need b >= 2 and k >= 2");
  if (mu.size() != k) throw ValidationError("gen_design: effect vector must have length k");
  Matrix raw(b, k);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < k; ++j) raw(i, j) = model.draw(rng) + mu[j];
  }
  return make_design(raw);
}

Vector effect_vector(int k, double c) {
  Vector mu = Vector::Zero(k);
  mu[0] = -c;
  mu[k - 1] = c;
  return mu;
}

Vector effect_for_level(int k, double level) {
  if (level < 0.0) throw ValidationError("effect level must be non-negative");
  return effect_vector(k, std::sqrt(level));
}

namespace {

BlockDesign outer_design(const AccuracyConfig& c, std::size_t o) {
  RngStream rng(derive_seed(c.seed, "simulate.design"), o);
  return gen_design(c.model, c.b, c.k, Vector::Zero(c.k), rng);
}

std::uint64_t outer_resample_seed(const AccuracyConfig& c, std::size_t o) {
  return derive_seed(c.seed, "simulate.replicate", o);
}

}  // namespace

AccuracyResult accuracy_experiment(const AccuracyConfig& config) {
  const BlockDesign d = outer_design(config, 0);
  AccuracyResult out;
  const double log_k = std::log(static_cast<double>(config.k));
  const double bound = std::sqrt(2.0 * log_k);
  for (double u : config.grid) {
    std::ostringstream msg;
    if (0.5 * u * u >= log_k - config.tail.epsilon) {
      msg << "u = " << u << " is outside the admissible range u < sqrt(2 log " << config.k
          << ") = " << bound << "; saddlepoint cells are unavailable";
      out.warnings.push_back(msg.str());
    } else if (u >= 0.9 * bound) {
      msg << "u = " << u << " is close to the admissible limit sqrt(2 log " << config.k
          << ") = " << bound;
      out.warnings.push_back(msg.str());
    }
  }
  TailTableConfig tc;
  tc.n_mc = config.n_mc;
  tc.seed = outer_resample_seed(config, 0);
  tc.tail = config.tail;
  tc.threads = config.threads;
  out.table = tail_table(d, config.grid, tc);
  if (out.table.solver_failures > 0) {
    out.warnings.push_back(std::to_string(out.table.solver_failures) +
                           " resamples had no finite Lambda value and were counted as +inf");
  }
  return out;
}

UnconditionalResult unconditional_accuracy(const AccuracyConfig& config, std::size_t n_outer,
                                           std::size_t n_inner) {
  if (n_outer < 1 || n_inner < 1) throw ValidationError("need at least one design and one resample");
  if (static_cast<double>(n_outer) * static_cast<double>(n_inner) > kUnconditionalCapacity) {
    throw CapacityError("n_outer x n_inner exceeds the limit of 10^10 resamples");
  }
  const std::size_t m = config.grid.size();
  const double b = config.b;
  std::vector<double> thresholds(m);
  UnconditionalResult out;
  out.u = config.grid;
  out.n_outer = n_outer;
  out.n_inner = n_inner;
  for (std::size_t j = 0; j < m; ++j) {
    thresholds[j] = u_to_f(config.grid[j], b, config.k);
    out.f_dist.push_back(f_survival(thresholds[j], config.k - 1, (config.k - 1) * (config.b - 1)));
  }
  std::vector<std::vector<double>> props(n_outer, std::vector<double>(m, 0.0));
  for_each_chunk(n_outer, std::max(1u, config.threads), [&](std::size_t o) {
    const BlockDesign d = outer_design(config, o);
    ResampleOptions opt;
    opt.lambda = false;
    const auto draws = draw_resamples(d, n_inner, outer_resample_seed(config, o), opt);
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t count = 0;
      for (double f : draws.f) {
        if (exceeds(f, thresholds[j])) ++count;
      }
      props[o][j] = static_cast<double>(count) / static_cast<double>(n_inner);
    }
  });
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (std::size_t o = 0; o < n_outer; ++o) mean += props[o][j];
    mean /= static_cast<double>(n_outer);
    double ss = 0.0;
    for (std::size_t o = 0; o < n_outer; ++o) ss += (props[o][j] - mean) * (props[o][j] - mean);
    out.mean_mc_f.push_back(mean);
    out.se.push_back(n_outer > 1 ? std::sqrt(ss / static_cast<double>(n_outer - 1) /
                                             static_cast<double>(n_outer))
                                 : 0.0);
  }
  return out;
}

SaddlepointPValue saddlepoint_pvalue(const BlockDesign& d, std::size_t n_sphere, RngStream& rng,
                                     double epsilon, bool quadrature) {
  const DesignLevelSet problem(sort_design(d));
  SaddlepointPValue out;
  const double lambda = lambda_at(problem.solver().design(), reduced_means(d));
  out.u = std::sqrt(2.0 * lambda);
  if (!(out.u > 1e-6)) return out;
  double u = out.u;
  const double u_max = max_admissible_u(problem, epsilon);
  if (!(u < u_max)) {
    out.inadmissible = true;
    // Just inside the strict guard u^2/2 < log k - epsilon.
    u = u_max * (1.0 - 1e-12);
  }
  TailOptions opt;
  opt.epsilon = epsilon;
  opt.sphere_samples = n_sphere;
  opt.quadrature = quadrature;
  const auto t = approximate_tail(problem, u, opt, rng);
  out.p_lr = t.p_lr;
  out.p_bn = t.p_bn;
  out.g = t.g;
  out.g_se = t.g_se;
  return out;
}

PowerResult power_experiment(const PowerConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  if (config.n_replicates < 1) throw ValidationError("need at least one replicate");
  PowerResult out;
  out.n_replicates = config.n_replicates;
  out.alpha = config.alpha;
  const std::uint64_t err_seed = derive_seed(config.seed, "power.errors");
  const std::uint64_t sphere_seed = derive_seed(config.seed, "power.sphere");
  const std::size_t n = config.n_replicates;

  for (std::size_t li = 0; li < config.levels.size(); ++li) {
    const Vector mu = effect_for_level(config.k, config.levels[li]);
    std::vector<unsigned char> rej_f(n, 0), rej_lr(n, 0), rej_bn(n, 0), inadm(n, 0), fail(n, 0);
    for_each_chunk(n, std::max(1u, config.threads), [&](std::size_t r) {
      RngStream err(err_seed, r);
      const BlockDesign d = gen_design(config.model, config.b, config.k, mu, err);
      try {
        const auto pf = mc_pvalue(d, Statistic::f, config.n_perm, derive_seed(config.seed, "power.perm", r));
        rej_f[r] = pf.p_value <= config.alpha;
      } catch (const DegenerateDesign&) {
        rej_f[r] = 1;  // perfect separation
      }
      try {
        RngStream sphere(sphere_seed, r);
        const auto sp = saddlepoint_pvalue(d, config.n_sphere, sphere, config.epsilon);
        rej_lr[r] = sp.p_lr <= config.alpha;
        rej_bn[r] = sp.p_bn <= config.alpha;
        inadm[r] = sp.inadmissible;
      } catch (const Error&) {
        fail[r] = 1;
      }
    });
    PowerRow row;
    row.level = config.levels[li];
    for (std::size_t r = 0; r < n; ++r) {
      row.power_f += rej_f[r];
      row.power_lr += rej_lr[r];
      row.power_bn += rej_bn[r];
      row.inadmissible += inadm[r];
      row.failures += fail[r];
    }
    row.power_f /= static_cast<double>(n);
    row.power_lr /= static_cast<double>(n);
    row.power_bn /= static_cast<double>(n);
    out.rows.push_back(row);
    if (config.progress) config.progress(li + 1, config.levels.size());
  }
  return out;
}

}  // namespace tiltperm
