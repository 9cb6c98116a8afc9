#pragma once

// Modified Adam / RMSProp update with per-step ratio diagnostics.
//
// The modified update divides the first moment by sqrt(v + zeta) instead of
// the textbook sqrt(v) + lambda. No bias correction is applied to either
// moment. RMSProp is the beta1 = 0 case and shares the exact code path.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwadam {

using Vec = std::vector<double>;

enum class Variant { Modified, Original };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct OptimizerConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double zeta = 1e-8;
  Variant variant = Variant::Modified;
  double lambda = 0.0;  // only read by Variant::Original
  // Throw InvariantViolation from adam_step when a StepReport bound fails.
  bool check_invariants = false;

  // Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;

  // beta1^2 < beta2: the momentum ratio bound exists.
  bool momentum_bound_defined() const { return beta1 * beta1 < beta2; }
};

struct OptimizerState {
  Vec x;
  Vec m;
  Vec v;
  std::int64_t t = 0;

  std::size_t dim() const { return x.size(); }
};

struct StepReport {
  double displacement_inf_norm = 0.0;
  double momentum_ratio_max = 0.0;
  double gradient_ratio_max = 0.0;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejects non-positive or non-finite v0 entries and non-finite x0.
OptimizerState init_state(const OptimizerConfig& config, std::span<const double> x0,
                          std::span<const double> v0);

// v0 defaults to zeta in every coordinate.
OptimizerState init_state(const OptimizerConfig& config, std::span<const double> x0);

StepReport adam_step(OptimizerState& state, const OptimizerConfig& config,
                     std::span<const double> g);

// adam_step with beta1 forced to zero.
StepReport rmsprop_step(OptimizerState& state, const OptimizerConfig& config,
                        std::span<const double> g);

// sqrt(beta2 * v + zeta) from the pre-step second moment.
Vec surrogate_denominator(const OptimizerState& state, const OptimizerConfig& config);

// (1 - beta1) / (sqrt(1 - beta2) * sqrt(1 - beta1^2 / beta2)); requires beta1^2 < beta2.
double momentum_ratio_bound(const OptimizerConfig& config);

// 1 / sqrt(1 - beta2).
double gradient_ratio_bound(const OptimizerConfig& config);

// Relative slack used when comparing a report against its closed-form bound.
inline constexpr double kBoundRelTol = 1e-12;
inline constexpr double kBoundAbsTol = 1e-12;

inline bool within_bound(double lhs, double rhs) {
  return lhs <= rhs * (1.0 + kBoundRelTol) + kBoundAbsTol;
}

// Which StepReport bounds a report violates; empty when all hold. Only
// meaningful for the modified variant.
std::vector<std::string> report_violations(const StepReport& report,
                                           const OptimizerConfig& config);

}  // namespace cwadam
