#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ljchain/ensemble.hpp"
#include "ljchain/potentials.hpp"

// Experiment configuration: a small TOML-style text format with [table] and
// [[potential]] blocks (exact grammar in the README), parsed into a validated
// RunConfig that round-trips through serialize().
namespace ljchain {

struct ConfigError : std::runtime_error {
  enum class Kind { parse, unknown_label, range };
  Kind kind;
  int line;
  int column;
  ConfigError(Kind k, const std::string& message, int line_ = 0, int column_ = 0)
      : std::runtime_error(message), kind(k), line(line_), column(column_) {}
};

enum class ExperimentMode { validate, predict, minimize, sweep, recover, ergodic };
const char* to_string(ExperimentMode m);

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::predict;
  double gamma = 0.0;
  std::vector<double> gamma_list;  // sweep: overrides gamma when nonempty
  std::vector<std::uint64_t> n_list;
  std::vector<std::uint64_t> seeds;
  int k_max = 2;
  std::uint32_t weakest_count = 32;
  // minimize
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  // recover
  double slope = 0.0;
  double rho = 0.1;
  double jump_x = 0.0;
  std::vector<double> mu_list;
  // ergodic
  double window_a = 0.0;
  double window_b = 1.0;
  std::string quantity = "inverse_alpha";
  double kappa = 0.05;

  std::string output = "out";
  int workers = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

struct RunConfig {
  std::vector<PotentialSpec> potentials;
  ClassParams class_params;

  std::string law = "periodic";  // "iid" | "markov" | "periodic"
  std::vector<std::string> support_labels;
  std::vector<double> probabilities;
  std::vector<std::vector<double>> transition;
  std::vector<double> initial;
  std::vector<std::string> pattern_labels;
  std::string ensemble_label = "ensemble";

  ExperimentConfig experiment;

  bool operator==(const RunConfig&) const = default;

  std::shared_ptr<const Ensemble> build_ensemble() const;
  std::string serialize() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

}  // namespace ljchain
