#include "cwadam/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cwadam {

double ObjectiveSpec::scalar(const std::string& key, double fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1) {
    throw std::invalid_argument("parameter '" + key + "' of '" + name + "' must be a scalar");
  }
  return it->second.front();
}

std::vector<double> ObjectiveSpec::vector(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw std::invalid_argument("objective '" + name + "' requires parameter '" + key + "'");
  }
  return it->second;
}

const std::map<std::string, std::vector<std::string>>& objective_catalog() {
  static const std::map<std::string, std::vector<std::string>> catalog = {
      {"quartic", {"dim", "sigma0", "sigma1", "box"}},
      {"exp_sum", {"dim", "sigma0", "sigma1", "box"}},
      {"gaussian_linreg", {}},
      {"quadratic", {"a", "sigma0", "sigma1"}},
      {"logistic_toy", {"n", "features", "batch", "data_seed", "separation"}},
  };
  return catalog;
}

void Objective::check_dim(std::span<const double> x) const {
  if (x.size() != dim_) {
    std::ostringstream msg;
    msg << name() << ": point has dimension " << x.size() << ", expected " << dim_;
    throw std::invalid_argument(msg.str());
  }
}

Evaluation Objective::eval(std::span<const double> x) const {
  Evaluation e;
  e.f = value(x);
  e.grad.resize(dim_);
  gradient(x, e.grad);
  return e;
}

Vec Objective::grad(std::span<const double> x) const {
  Vec g(dim_);
  gradient(x, g);
  return g;
}

Vec Objective::sample(std::span<const double> x, Engine& rng) const {
  Vec g(dim_);
  sample(x, rng, g);
  return g;
}

namespace {

double require_nonneg(const ObjectiveSpec& spec, const std::string& key, double fallback) {
  const double v = spec.scalar(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("parameter '" + key + "' of '" + spec.name +
                                "' must be finite and nonnegative");
  }
  return v;
}

std::size_t require_count(const ObjectiveSpec& spec, const std::string& key, double fallback) {
  const double v = spec.scalar(key, fallback);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    throw std::invalid_argument("parameter '" + key + "' of '" + spec.name +
                                "' must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

double require_box(const ObjectiveSpec& spec, double fallback) {
  const double b = spec.scalar("box", fallback);
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("parameter 'box' of '" + spec.name + "' must be positive");
  }
  return b;
}

// Shared sampler: g_i = df_i (1 + sigma1 xi) + sigma0 xi'.
class PerturbedObjective : public Objective {
 public:
  void sample(std::span<const double> x, Engine& rng, std::span<double> out) const override {
    gradient(x, out);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      double gi = out[i];
      if (sigma1_ > 0.0) gi *= 1.0 + sigma1_ * normal(rng);
      if (sigma0_ > 0.0) gi += sigma0_ * normal(rng);
      out[i] = gi;
    }
  }

 protected:
  PerturbedObjective(ObjectiveSpec spec, std::size_t dim) : Objective(std::move(spec), dim) {
    sigma0_ = require_nonneg(spec_, "sigma0", 0.0);
    sigma1_ = require_nonneg(spec_, "sigma1", 0.0);
    noise_ = {sigma0_ * sigma0_, 1.0 + sigma1_ * sigma1_};
  }

  double sigma0_ = 0.0;
  double sigma1_ = 0.0;
};

class Quartic final : public PerturbedObjective {
 public:
  explicit Quartic(const ObjectiveSpec& spec)
      : PerturbedObjective(spec, require_count(spec, "dim", 1)) {
    box_ = require_box(spec_, 1.0);
    // x^2 + xy + y^2 <= |x|^3 + 1/2 + 3B^2/2 for |y| <= B.
    smooth_ = {std::sqrt(static_cast<double>(dim_)) * (1.5 * box_ * box_ + 0.5), 1.0};
  }

  double value(std::span<const double> x) const override {
    check_dim(x);
    double f = 0.0;
    for (double xi : x) f += 0.25 * xi * xi * xi * xi;
    return f;
  }

  void gradient(std::span<const double> x, std::span<double> out) const override {
    check_dim(x);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = x[i] * x[i] * x[i];
  }
};

class ExpSum final : public PerturbedObjective {
 public:
  explicit ExpSum(const ObjectiveSpec& spec)
      : PerturbedObjective(spec, require_count(spec, "dim", 1)) {
    box_ = require_box(spec_, 1.0);
    // |e^a - e^b| <= e^a (e^{2B} - 1)/(2B) |a - b| on the box.
    smooth_ = {0.0, std::expm1(2.0 * box_) / (2.0 * box_)};
  }

  double value(std::span<const double> x) const override {
    check_dim(x);
    double f = 0.0;
    for (double xi : x) f += std::exp(xi);
    return f;
  }

  void gradient(std::span<const double> x, std::span<double> out) const override {
    check_dim(x);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = std::exp(x[i]);
  }
};

class Quadratic final : public PerturbedObjective {
 public:
  explicit Quadratic(const ObjectiveSpec& spec)
      : PerturbedObjective(spec, spec.vector("a").size()), a_(spec.vector("a")) {
    if (a_.empty()) throw std::invalid_argument("quadratic: 'a' must be non-empty");
    double amax = 0.0;
    for (double ai : a_) {
      if (!(ai >= 0.0) || !std::isfinite(ai)) {
        throw std::invalid_argument("quadratic: curvatures 'a' must be finite and nonnegative");
      }
      amax = std::max(amax, ai);
    }
    smooth_ = {std::sqrt(static_cast<double>(dim_)) * amax, 0.0};
  }

  double value(std::span<const double> x) const override {
    check_dim(x);
    double f = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) f += 0.5 * a_[i] * x[i] * x[i];
    return f;
  }

  void gradient(std::span<const double> x, std::span<double> out) const override {
    check_dim(x);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = a_[i] * x[i];
  }

 private:
  Vec a_;
};

class GaussianLinreg final : public Objective {
 public:
  explicit GaussianLinreg(const ObjectiveSpec& spec) : Objective(spec, 1) {
    noise_ = {0.0, 3.0};
    smooth_ = {2.0, 0.0};
  }

  double value(std::span<const double> x) const override {
    check_dim(x);
    return x[0] * x[0];
  }

  void gradient(std::span<const double> x, std::span<double> out) const override {
    check_dim(x);
    out[0] = 2.0 * x[0];
  }

  void sample(std::span<const double> x, Engine& rng, std::span<double> out) const override {
    check_dim(x);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z = normal(rng);
    out[0] = 2.0 * z * z * x[0];
  }
};

class LogisticToy final : public Objective {
 public:
  explicit LogisticToy(const ObjectiveSpec& spec)
      : Objective(spec, require_count(spec, "features", 5)) {
    n_ = require_count(spec_, "n", 512);
    batch_ = require_count(spec_, "batch", 16);
    const double separation = require_nonneg(spec_, "separation", 1.0);
    const auto data_seed = static_cast<std::uint64_t>(require_nonneg(spec_, "data_seed", 7.0));

    Engine rng = make_stream(data_seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double shift = separation / std::sqrt(static_cast<double>(dim_));
    features_.resize(n_ * dim_);
    labels_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      labels_[k] = (k % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        features_[k * dim_ + i] = labels_[k] * shift + normal(rng);
      }
    }

    double max_sq = 0.0;
    Vec col(dim_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      double row_norm_sq = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double xki = features_[k * dim_ + i];
        row_norm_sq += xki * xki;
        max_sq = std::max(max_sq, xki * xki);
      }
      const double row_norm = std::sqrt(row_norm_sq);
      for (std::size_t i = 0; i < dim_; ++i) col[i] += std::abs(features_[k * dim_ + i]) * row_norm;
    }
    const double worst = *std::max_element(col.begin(), col.end()) / (4.0 * static_cast<double>(n_));
    noise_ = {max_sq, 0.0};
    smooth_ = {std::sqrt(static_cast<double>(dim_)) * worst, 0.0};
  }

  double value(std::span<const double> w) const override {
    check_dim(w);
    double total = 0.0;
    for (std::size_t k = 0; k < n_; ++k) total += softplus(-margin(w, k));
    return total / static_cast<double>(n_);
  }

  void gradient(std::span<const double> w, std::span<double> out) const override {
    check_dim(w);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < n_; ++k) accumulate(w, k, out);
    for (double& o : out) o /= static_cast<double>(n_);
  }

  void sample(std::span<const double> w, Engine& rng, std::span<double> out) const override {
    if (batch_ >= n_) {
      gradient(w, out);
      return;
    }
    check_dim(w);
    std::fill(out.begin(), out.end(), 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    for (std::size_t b = 0; b < batch_; ++b) accumulate(w, pick(rng), out);
    for (double& o : out) o /= static_cast<double>(batch_);
  }

 private:
  static double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }

  double margin(std::span<const double> w, std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += w[i] * features_[k * dim_ + i];
    return labels_[k] * s;
  }

  // Adds the gradient of log(1 + exp(-y w.x)) for sample k.
  void accumulate(std::span<const double> w, std::size_t k, std::span<double> out) const {
    const double z = margin(w, k);
    const double weight = -labels_[k] / (1.0 + std::exp(z));
    for (std::size_t i = 0; i < dim_; ++i) out[i] += weight * features_[k * dim_ + i];
  }

  std::size_t n_ = 0;
  std::size_t batch_ = 0;
  Vec features_;
  Vec labels_;
};

}  // namespace

ObjectiveOracle make_objective(const ObjectiveSpec& spec) {
  const auto& catalog = objective_catalog();
  auto entry = catalog.find(spec.name);
  if (entry == catalog.end()) {
    throw std::invalid_argument("unknown objective '" + spec.name + "'");
  }
  for (const auto& [key, value] : spec.params) {
    if (std::find(entry->second.begin(), entry->second.end(), key) == entry->second.end()) {
      throw std::invalid_argument("objective '" + spec.name + "' has no parameter '" + key + "'");
    }
    for (double v : value) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("parameter '" + key + "' of '" + spec.name + "' is not finite");
      }
    }
  }
  if (spec.name == "quartic") return std::make_shared<Quartic>(spec);
  if (spec.name == "exp_sum") return std::make_shared<ExpSum>(spec);
  if (spec.name == "quadratic") return std::make_shared<Quadratic>(spec);
  if (spec.name == "gaussian_linreg") return std::make_shared<GaussianLinreg>(spec);
  return std::make_shared<LogisticToy>(spec);
}

Vec noise_envelope(const Objective& oracle, std::span<const double> x) {
  Vec g = oracle.grad(x);
  const auto& n = oracle.noise();
  for (double& gi : g) gi = n.d0 + n.d1 * gi * gi;
  return g;
}

}  // namespace cwadam
