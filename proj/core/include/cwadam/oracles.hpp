#pragma once

// Synthetic objectives with analytic gradients and stochastic gradient
// samplers whose noise and smoothness constants are known in closed form.
//
// Catalog:
//   quartic          f = sum x_i^4 / 4
//   exp_sum          f = sum exp(x_i)
//   gaussian_linreg  f(w) = w^2 sampled as g = 2 z^2 w, z ~ N(0, 1)
//   quadratic        f = 0.5 sum a_i x_i^2
//   logistic_toy     finite-sum logistic regression, minibatch gradients
//
// The first, second and fourth entries share the perturbation
//   g_i = df_i * (1 + sigma1 * xi_i) + sigma0 * xi'_i,
// giving D0 = sigma0^2 and D1 = 1 + sigma1^2.

#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cwadam/optim.hpp"
#include "cwadam/rng.hpp"

namespace cwadam {

struct NoiseModel {
  double d0 = 0.0;
  double d1 = 0.0;
};

struct SmoothnessModel {
  double l0 = 0.0;
  double l1 = 0.0;
};

struct ObjectiveSpec {
  std::string name;
  std::map<std::string, std::vector<double>> params;

  ObjectiveSpec() = default;
  explicit ObjectiveSpec(std::string n) : name(std::move(n)) {}

  ObjectiveSpec& set(const std::string& key, double value) {
    params[key] = {value};
    return *this;
  }
  ObjectiveSpec& set(const std::string& key, std::vector<double> values) {
    params[key] = std::move(values);
    return *this;
  }
  double scalar(const std::string& key, double fallback) const;
  std::vector<double> vector(const std::string& key) const;
};

// Names accepted by make_objective, and the parameter keys each accepts.
const std::map<std::string, std::vector<std::string>>& objective_catalog();

struct Evaluation {
  double f = 0.0;
  Vec grad;
};

class Objective {
 public:
  virtual ~Objective() = default;

  const std::string& name() const { return spec_.name; }
  const ObjectiveSpec& spec() const { return spec_; }
  std::size_t dim() const { return dim_; }
  const NoiseModel& noise() const { return noise_; }
  const SmoothnessModel& smooth() const { return smooth_; }
  double f_inf() const { return f_inf_; }
  // Half-width of the box (in the infinity norm) on which smooth() is valid.
  double box() const { return box_; }

  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
  virtual void sample(std::span<const double> x, Engine& rng, std::span<double> out) const = 0;

  Evaluation eval(std::span<const double> x) const;
  Vec grad(std::span<const double> x) const;
  Vec sample(std::span<const double> x, Engine& rng) const;

 protected:
  Objective(ObjectiveSpec spec, std::size_t dim) : spec_(std::move(spec)), dim_(dim) {}

  void check_dim(std::span<const double> x) const;

  ObjectiveSpec spec_;
  std::size_t dim_;
  NoiseModel noise_;
  SmoothnessModel smooth_;
  double f_inf_ = 0.0;
  double box_ = std::numeric_limits<double>::infinity();
};

using ObjectiveOracle = std::shared_ptr<const Objective>;

// Throws std::invalid_argument for unknown names, unknown parameter keys and
// invalid parameter values.
ObjectiveOracle make_objective(const ObjectiveSpec& spec);

// D0 + D1 * (df_i(x))^2 per coordinate.
Vec noise_envelope(const Objective& oracle, std::span<const double> x);

}  // namespace cwadam
