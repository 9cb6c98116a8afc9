#pragma once

// Experiment configuration documents (JSON). Each command accepts its own
// set of keys; anything else is rejected with the offending key named.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwadam/estimators.hpp"
#include "cwadam/harness.hpp"
#include "cwadam/oracles.hpp"

namespace cwadam::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectorySpec {
  std::string optimizer = "adam";  // adam | rmsprop
  double eta = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double zeta = 1e-8;
  std::int64_t steps = 200;
  Vec x0;
};

struct ExperimentConfig {
  std::string command;
  ObjectiveSpec oracle;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
  std::int64_t seeds = 20;
  bool strict = false;
  LogMode log = LogMode::Summary;

  // run / scale-study
  ScheduleKind optimizer = ScheduleKind::RMSProp;
  double beta1 = 0.9;
  double zeta = 1.0;
  double eps = 0.2;
  std::vector<double> eps_list;
  Vec x1;
  Vec v0;
  std::int64_t max_steps = 0;
  bool stop_at_threshold = false;
  std::optional<double> eta;

  // estimate-smoothness
  TrajectorySpec trajectory;
  std::vector<double> gammas;
  double quantile = 0.95;

  // estimate-noise
  std::vector<Vec> points;
  std::int64_t n_samples = 10000;
  bool common_random_numbers = true;

  // parity
  ParitySettings parity;
};

// Parses and validates; throws ConfigError. `x1` given as a number fills all
// coordinates.
ExperimentConfig parse_config(const std::string& command, const std::string& text);
ExperimentConfig load_config(const std::string& command, const std::string& path);

// Keys each command accepts at the top level.
const std::vector<std::string>& allowed_keys(const std::string& command);

}  // namespace cwadam::cli
