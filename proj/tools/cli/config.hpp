#pragma once

#include <istream>
#include <map>
#include <string>

#include <tiltperm/simulate.hpp>

namespace tiltperm::cli {

/// Flat `key = value` file; '#' starts a comment. Keys are unique.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in, const std::string& origin);
KeyValues read_key_values(const std::string& path);

enum class ExperimentKind { accuracy, unconditional, power };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::accuracy;
  AccuracyConfig accuracy;
  std::size_t n_outer = 1000;   // unconditional only
  std::size_t n_inner = 100000;  // unconditional only
  PowerConfig power;
};

/// Builds an experiment from a key-value map; unknown keys and malformed
/// values raise ValidationError.
ExperimentConfig experiment_from(const KeyValues& kv);

/// The resolved configuration, written back in the same key-value form.
KeyValues to_key_values(const ExperimentConfig& c);

std::vector<double> parse_real_list(const std::string& text, const std::string& what);

}  // namespace tiltperm::cli
