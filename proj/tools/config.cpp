#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace cwadam::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kSchedule = {
    "oracle", "output_dir", "seed", "seeds", "strict", "log", "optimizer", "beta1", "zeta",
    "x1", "v0", "max_steps", "stop_at_threshold", "eta"};

std::vector<std::string> with(std::vector<std::string> base, const std::string& extra) {
  base.push_back(extra);
  return base;
}

const std::map<std::string, std::vector<std::string>>& key_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"run", with(kSchedule, "eps")},
      {"scale-study", with(kSchedule, "eps_list")},
      {"estimate-smoothness",
       {"oracle", "output_dir", "seed", "seeds", "trajectory", "gammas", "quantile"}},
      {"estimate-noise",
       {"oracle", "output_dir", "seed", "points", "n_samples", "common_random_numbers"}},
      {"parity",
       {"oracle", "output_dir", "seed", "seeds", "eta", "beta1", "beta2", "lambda", "zeta",
        "steps", "x0"}},
      {"verify-lemmas", {"output_dir", "seed", "cases"}},
  };
  return table;
}

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double number(const json& j, const std::string& name) {
  if (!j.is_number()) throw ConfigError("field '" + name + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("field '" + name + "' must be finite");
  return v;
}

std::int64_t integer(const json& j, const std::string& name) {
  if (!j.is_number_integer()) throw ConfigError("field '" + name + "' must be an integer");
  return j.get<std::int64_t>();
}

bool boolean(const json& j, const std::string& name) {
  if (!j.is_boolean()) throw ConfigError("field '" + name + "' must be true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& name) {
  if (!j.is_string()) throw ConfigError("field '" + name + "' must be a string");
  return j.get<std::string>();
}

Vec numbers(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError("field '" + name + "' must be an array of numbers");
  Vec out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(number(j[k], name + "[" + std::to_string(k) + "]"));
  }
  return out;
}

// A number fills every coordinate; an array must match the dimension.
Vec point(const json& j, const std::string& name, std::size_t d) {
  if (j.is_number()) return Vec(d, number(j, name));
  Vec v = numbers(j, name);
  if (v.size() != d) {
    throw ConfigError("field '" + name + "' has " + std::to_string(v.size()) +
                      " entries; the oracle has dimension " + std::to_string(d));
  }
  return v;
}

ObjectiveSpec parse_oracle(const json& j) {
  check_keys(j, {"name", "params"}, "'oracle'");
  if (!j.contains("name")) throw ConfigError("missing required field 'oracle.name'");
  ObjectiveSpec spec(text(j["name"], "oracle.name"));
  if (j.contains("params")) {
    check_keys(j["params"], [&] {
      auto it = objective_catalog().find(spec.name);
      return it == objective_catalog().end() ? std::vector<std::string>{} : it->second;
    }(), "'oracle.params'");
    for (const auto& [key, value] : j["params"].items()) {
      const std::string name = "oracle.params." + key;
      if (value.is_array()) {
        spec.set(key, numbers(value, name));
      } else {
        spec.set(key, number(value, name));
      }
    }
  }
  return spec;
}

}  // namespace

const std::vector<std::string>& allowed_keys(const std::string& command) {
  auto it = key_table().find(command);
  if (it == key_table().end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

ExperimentConfig parse_config(const std::string& command, const std::string& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc, allowed_keys(command), "the config");

  ExperimentConfig c;
  c.command = command;
  if (doc.contains("output_dir")) c.output_dir = text(doc["output_dir"], "output_dir");
  if (doc.contains("seed")) {
    const auto s = integer(doc["seed"], "seed");
    if (s < 0) throw ConfigError("field 'seed' must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (command == "verify-lemmas") {
    if (doc.contains("cases")) c.n_samples = integer(doc["cases"], "cases");
    return c;
  }

  if (!doc.contains("oracle")) throw ConfigError("missing required field 'oracle'");
  c.oracle = parse_oracle(doc["oracle"]);
  ObjectiveOracle oracle;
  try {
    oracle = make_objective(c.oracle);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("oracle: ") + e.what());
  }
  const std::size_t d = oracle->dim();

  if (doc.contains("seeds")) {
    c.seeds = integer(doc["seeds"], "seeds");
    if (c.seeds < 1) throw ConfigError("field 'seeds' must be >= 1");
  }
  if (doc.contains("strict")) c.strict = boolean(doc["strict"], "strict");
  if (doc.contains("log")) {
    try {
      c.log = log_mode_from_string(text(doc["log"], "log"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("field 'log': ") + e.what());
    }
  }

  if (command == "run" || command == "scale-study") {
    if (doc.contains("optimizer")) {
      const auto name = text(doc["optimizer"], "optimizer");
      if (name == "rmsprop") {
        c.optimizer = ScheduleKind::RMSProp;
      } else if (name == "adam") {
        c.optimizer = ScheduleKind::Adam;
      } else {
        throw ConfigError("field 'optimizer' must be 'rmsprop' or 'adam'");
      }
    }
    if (doc.contains("beta1")) c.beta1 = number(doc["beta1"], "beta1");
    if (doc.contains("zeta")) c.zeta = number(doc["zeta"], "zeta");
    if (!(c.zeta > 0.0)) throw ConfigError("field 'zeta' must be positive");
    c.x1 = doc.contains("x1") ? point(doc["x1"], "x1", d) : Vec(d, 0.0);
    if (doc.contains("v0")) c.v0 = point(doc["v0"], "v0", d);
    if (doc.contains("max_steps")) c.max_steps = integer(doc["max_steps"], "max_steps");
    if (c.max_steps < 0) throw ConfigError("field 'max_steps' must be nonnegative");
    if (doc.contains("stop_at_threshold")) {
      c.stop_at_threshold = boolean(doc["stop_at_threshold"], "stop_at_threshold");
    }
    if (doc.contains("eta")) c.eta = number(doc["eta"], "eta");
    if (command == "run") {
      if (!doc.contains("eps")) throw ConfigError("missing required field 'eps'");
      c.eps = number(doc["eps"], "eps");
      if (!(c.eps > 0.0)) throw ConfigError("field 'eps' must be positive");
    } else {
      if (!doc.contains("eps_list")) throw ConfigError("missing required field 'eps_list'");
      c.eps_list = numbers(doc["eps_list"], "eps_list");
      if (c.eps_list.size() < 3) throw ConfigError("field 'eps_list' needs at least three values");
      for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
        if (!(c.eps_list[k] > 0.0) || (k > 0 && !(c.eps_list[k] < c.eps_list[k - 1]))) {
          throw ConfigError("field 'eps_list' must be positive and strictly decreasing");
        }
      }
    }
  } else if (command == "estimate-smoothness") {
    if (doc.contains("trajectory")) {
      const json& t = doc["trajectory"];
      check_keys(t, {"optimizer", "eta", "beta1", "beta2", "zeta", "steps", "x0"}, "'trajectory'");
      auto& ts = c.trajectory;
      if (t.contains("optimizer")) ts.optimizer = text(t["optimizer"], "trajectory.optimizer");
      if (ts.optimizer != "adam" && ts.optimizer != "rmsprop") {
        throw ConfigError("field 'trajectory.optimizer' must be 'rmsprop' or 'adam'");
      }
      if (t.contains("eta")) ts.eta = number(t["eta"], "trajectory.eta");
      if (t.contains("beta1")) ts.beta1 = number(t["beta1"], "trajectory.beta1");
      if (t.contains("beta2")) ts.beta2 = number(t["beta2"], "trajectory.beta2");
      if (t.contains("zeta")) ts.zeta = number(t["zeta"], "trajectory.zeta");
      if (t.contains("steps")) ts.steps = integer(t["steps"], "trajectory.steps");
      if (t.contains("x0")) ts.x0 = point(t["x0"], "trajectory.x0", d);
      if (ts.steps < 1) throw ConfigError("field 'trajectory.steps' must be >= 1");
    }
    if (c.trajectory.x0.empty()) c.trajectory.x0 = Vec(d, 0.0);
    c.gammas = doc.contains("gammas") ? numbers(doc["gammas"], "gammas") : kDefaultGammas;
    for (double g : c.gammas) {
      if (!(g > 0.0 && g <= 1.0)) throw ConfigError("field 'gammas' entries must lie in (0, 1]");
    }
    if (doc.contains("quantile")) c.quantile = number(doc["quantile"], "quantile");
    if (!(c.quantile > 0.0 && c.quantile < 1.0)) {
      throw ConfigError("field 'quantile' must lie in (0, 1)");
    }
  } else if (command == "estimate-noise") {
    if (!doc.contains("points")) throw ConfigError("missing required field 'points'");
    const json& p = doc["points"];
    if (!p.is_array() || p.empty()) throw ConfigError("field 'points' must be a non-empty array");
    for (std::size_t k = 0; k < p.size(); ++k) {
      c.points.push_back(point(p[k], "points[" + std::to_string(k) + "]", d));
    }
    if (doc.contains("n_samples")) c.n_samples = integer(doc["n_samples"], "n_samples");
    if (c.n_samples < 100) throw ConfigError("field 'n_samples' must be >= 100");
    if (doc.contains("common_random_numbers")) {
      c.common_random_numbers = boolean(doc["common_random_numbers"], "common_random_numbers");
    }
  } else if (command == "parity") {
    auto& p = c.parity;
    if (doc.contains("eta")) p.eta = number(doc["eta"], "eta");
    if (doc.contains("beta1")) p.beta1 = number(doc["beta1"], "beta1");
    if (doc.contains("beta2")) p.beta2 = number(doc["beta2"], "beta2");
    if (doc.contains("lambda")) p.lambda = number(doc["lambda"], "lambda");
    p.zeta = doc.contains("zeta") ? number(doc["zeta"], "zeta") : p.lambda * p.lambda;
    if (doc.contains("steps")) p.steps = integer(doc["steps"], "steps");
    if (p.steps < 1) throw ConfigError("field 'steps' must be >= 1");
    p.x0 = doc.contains("x0") ? point(doc["x0"], "x0", d) : Vec(d, 0.0);
    p.seeds = doc.contains("seeds") ? c.seeds : 5;
    c.seeds = p.seeds;
  }
  return c;
}

ExperimentConfig load_config(const std::string& command, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(command, ss.str());
}

}  // namespace cwadam::cli
