#pragma once

// Hyperparameter schedules that make the RMSProp and Adam convergence
// theorems applicable, with every intermediate constant exposed for audit.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "cwadam/oracles.hpp"

namespace cwadam {

struct ProblemConstants {
  std::size_t d = 1;
  double l0 = 0.0;
  double l1 = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;
  double zeta = 1.0;
  double f1 = 0.0;        // f(x1); also f(u1) since x0 = x1
  double grad1_sq = 0.0;  // ||grad f(x1)||^2
  double f_star = 0.0;
  double v0_norm = 0.0;     // ||v0||
  double v0_log_sum = 0.0;  // sum_i ln v0_i

  void validate() const;
};

// Constants for starting point x1 and initial second moment v0 (zeta when empty).
ProblemConstants problem_constants(const Objective& oracle, std::span<const double> x1,
                                   double zeta, std::span<const double> v0 = {});

enum class ScheduleKind { RMSProp, Adam };

std::string to_string(ScheduleKind kind);

struct ScheduleResult {
  ScheduleKind kind = ScheduleKind::RMSProp;
  double eps = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double eta = 0.0;
  double eta_ceiling = 0.0;
  std::int64_t t_min = 0;
  double t_min_real = 0.0;  // before rounding up
  std::map<std::string, double> constants;
  double predicted_bound = 0.0;
  // The theorem's smallness condition on eps holds.
  bool in_regime = true;
  int fixed_point_iterations = 0;
};

// eta defaults to the largest admissible value; a smaller override is accepted
// and a larger one rejected.
ScheduleResult rmsprop_schedule(double eps, const ProblemConstants& pc,
                                std::optional<double> eta_override = std::nullopt);

ScheduleResult adam_schedule(double eps, double beta1, const ProblemConstants& pc,
                             std::optional<double> eta_override = std::nullopt);

// All Adam schedule constants evaluated at a given (beta1, beta2). The final
// constants of adam_schedule are exactly adam_constants at its emitted beta2.
std::map<std::string, double> adam_constants(double eps, double beta1, double beta2,
                                             const ProblemConstants& pc);

// The predicted bound of a result; throws if `kind` does not match.
double target_bound(const ScheduleResult& result, ScheduleKind kind);

// Key = value lines, one per constant.
void write_schedule_report(std::ostream& os, const ScheduleResult& result);

}  // namespace cwadam
