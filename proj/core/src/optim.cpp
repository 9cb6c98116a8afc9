#include "cwadam/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cwadam {

std::string to_string(Variant v) {
  return v == Variant::Modified ? "modified" : "original";
}

Variant variant_from_string(const std::string& name) {
  if (name == "modified") return Variant::Modified;
  if (name == "original") return Variant::Original;
  throw std::invalid_argument("unknown optimizer variant '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("zeta must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be nonnegative");
}

OptimizerState init_state(const OptimizerConfig& config, std::span<const double> x0,
                          std::span<const double> v0) {
  config.validate();
  if (x0.size() != v0.size()) throw std::invalid_argument("x0 and v0 differ in dimension");
  for (double xi : x0) {
    if (!std::isfinite(xi)) throw std::invalid_argument("x0 must be finite");
  }
  for (double vi : v0) {
    if (!(vi > 0.0) || !std::isfinite(vi))
      throw std::invalid_argument("v0 entries must be positive and finite");
  }
  OptimizerState s;
  s.x.assign(x0.begin(), x0.end());
  s.m.assign(x0.size(), 0.0);
  s.v.assign(v0.begin(), v0.end());
  s.t = 0;
  return s;
}

OptimizerState init_state(const OptimizerConfig& config, std::span<const double> x0) {
  const Vec v0(x0.size(), config.zeta);
  return init_state(config, x0, v0);
}

namespace {

StepReport step_impl(OptimizerState& s, const OptimizerConfig& c, double beta1,
                     std::span<const double> g) {
  const std::size_t d = s.x.size();
  if (g.size() != d) {
    std::ostringstream msg;
    msg << "gradient has dimension " << g.size() << ", state has " << d;
    throw std::invalid_argument(msg.str());
  }
  for (double gi : g) {
    if (!std::isfinite(gi)) throw std::invalid_argument("gradient must be finite");
  }

  const double b2 = c.beta2;
  StepReport r;
  for (std::size_t i = 0; i < d; ++i) {
    const double gi = g[i];
    s.m[i] = beta1 * s.m[i] + (1.0 - beta1) * gi;
    s.v[i] = b2 * s.v[i] + (1.0 - b2) * gi * gi;
    const double denom_mod = std::sqrt(s.v[i] + c.zeta);
    double delta;
    if (c.variant == Variant::Modified) {
      delta = c.eta * s.m[i] / denom_mod;
    } else {
      delta = c.eta * s.m[i] / (std::sqrt(s.v[i]) + c.lambda);
    }
    const double x_old = s.x[i];
    s.x[i] = x_old - delta;
    r.displacement_inf_norm = std::max(r.displacement_inf_norm, std::abs(s.x[i] - x_old));
    r.momentum_ratio_max = std::max(r.momentum_ratio_max, std::abs(s.m[i]) / denom_mod);
    r.gradient_ratio_max = std::max(r.gradient_ratio_max, std::abs(gi) / denom_mod);
  }
  ++s.t;

  if (c.check_invariants && c.variant == Variant::Modified) {
    OptimizerConfig effective = c;
    effective.beta1 = beta1;
    const auto violations = report_violations(r, effective);
    if (!violations.empty()) {
      std::ostringstream msg;
      msg << "step " << s.t << ":";
      for (const auto& v : violations) msg << ' ' << v;
      throw InvariantViolation(msg.str());
    }
  }
  return r;
}

}  // namespace

StepReport adam_step(OptimizerState& state, const OptimizerConfig& config,
                     std::span<const double> g) {
  return step_impl(state, config, config.beta1, g);
}

StepReport rmsprop_step(OptimizerState& state, const OptimizerConfig& config,
                        std::span<const double> g) {
  return step_impl(state, config, 0.0, g);
}

Vec surrogate_denominator(const OptimizerState& state, const OptimizerConfig& config) {
  Vec out(state.v.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(config.beta2 * state.v[i] + config.zeta);
  }
  return out;
}

double momentum_ratio_bound(const OptimizerConfig& config) {
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  if (!(b1 * b1 < b2)) {
    throw std::invalid_argument("momentum ratio bound requires beta1^2 < beta2");
  }
  return (1.0 - b1) / (std::sqrt(1.0 - b2) * std::sqrt(1.0 - b1 * b1 / b2));
}

double gradient_ratio_bound(const OptimizerConfig& config) {
  return 1.0 / std::sqrt(1.0 - config.beta2);
}

std::vector<std::string> report_violations(const StepReport& report,
                                           const OptimizerConfig& config) {
  std::vector<std::string> out;
  if (!within_bound(report.gradient_ratio_max, gradient_ratio_bound(config))) {
    out.emplace_back("gradient_ratio");
  }
  if (config.momentum_bound_defined()) {
    const double mb = momentum_ratio_bound(config);
    if (!within_bound(report.momentum_ratio_max, mb)) out.emplace_back("momentum_ratio");
    if (!within_bound(report.displacement_inf_norm, config.eta * mb)) {
      out.emplace_back("displacement");
    }
  }
  return out;
}

}  // namespace cwadam
