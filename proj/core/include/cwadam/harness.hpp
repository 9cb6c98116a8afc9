#pragma once

// Monte-Carlo studies over seeded trajectories: convergence against the
// theorem bounds, the Stage-II and Hoelder relations, complexity scaling in
// eps and the modified-vs-original parity comparison.

#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cwadam/optim.hpp"
#include "cwadam/oracles.hpp"
#include "cwadam/schedule.hpp"
#include "cwadam/trajectory.hpp"

namespace cwadam {

// Runs task(0..n-1) on up to `jobs` threads. Exceptions are rethrown in index
// order after all tasks finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean and standard error (zero error for a single value).
MeanSe mean_se(const std::vector<double>& values);

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct StudySettings {
  ScheduleKind optimizer = ScheduleKind::RMSProp;
  double beta1 = 0.9;  // Adam only
  std::int64_t seeds = 20;
  std::uint64_t master_seed = 1;
  Vec x1;
  Vec v0;  // empty: zeta per coordinate
  double zeta = 1.0;
  unsigned jobs = 1;
  bool strict = false;
  LogMode log = LogMode::Summary;
  // Caps the schedule horizon when positive.
  std::int64_t max_steps = 0;
  bool stop_at_threshold = false;
  std::optional<double> eta_override;
};

struct SeedOutcome {
  std::int64_t index = 0;
  TrajectorySummary summary;
  std::vector<CurvePoint> curve;
};

struct StudyRow {
  double eps = 0.0;
  ScheduleResult schedule;
  std::int64_t horizon = 0;  // steps run per seed unless stopped early
  std::int64_t seeds = 0;

  MeanSe avg_grad_norm;
  double predicted_bound = 0.0;
  bool bound_holds = false;

  double stage2_offset = 0.0;  // c
  double stage2_gain = 0.0;    // 2 sqrt(d D1) / sqrt(1 - beta2)
  MeanSe stage2_lhs;
  MeanSe stage2_rhs;
  MeanSe stage2_diff;  // lhs - rhs per seed
  bool stage2_holds = false;
  std::int64_t stage2_pathwise_violations = 0;

  std::int64_t holder_violations = 0;
  std::int64_t telescoping_violations = 0;
  std::int64_t report_violations = 0;
  std::int64_t report_checks = 0;
  double potential_residual_max = 0.0;

  MeanSe threshold_step;  // censored seeds count as the horizon
  std::int64_t threshold_reached = 0;
  MeanSe t_used;
  double max_abs_x = 0.0;

  std::int64_t diverged = 0;
  bool divergence_failure = false;

  std::vector<SeedOutcome> per_seed;

  bool pathwise_clean() const {
    return holder_violations == 0 && telescoping_violations == 0 && report_violations == 0;
  }
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double schedule_slope = 0.0;
  double empirical_slope = 0.0;
};

// (2 sqrt(d D1) / sqrt(1 - beta2)) and c for the Stage-II comparison.
double stage2_gain(const ProblemConstants& pc, double beta2);
double stage2_offset(const ProblemConstants& pc);

StudyRow monte_carlo_convergence(const Objective& oracle, double eps,
                                 const StudySettings& settings);

// eps_list strictly decreasing with at least three entries.
StudyResult scaling_study(const Objective& oracle, const std::vector<double>& eps_list,
                          const StudySettings& settings);

struct ParitySettings {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lambda = 1e-8;
  double zeta = 1e-16;  // lambda^2 by default
  std::int64_t steps = 2000;
  std::int64_t seeds = 5;
  std::uint64_t master_seed = 1;
  Vec x0;
  unsigned jobs = 1;
};

struct ParityArm {
  Variant variant = Variant::Modified;
  MeanSe final_loss;
  MeanSe loss_area;  // mean of f(x_t) over the run
  std::vector<double> final_losses;
  std::vector<double> loss_areas;
  std::vector<std::vector<CurvePoint>> curves;
  std::vector<std::vector<double>> loss_curves;
  std::int64_t diverged = 0;
};

struct ParityResult {
  ParityArm modified;
  ParityArm original;
  double relative_gap = 0.0;  // |L_mod - L_orig| / L_orig on the mean final losses
  double area_relative_gap = 0.0;
};

// Both variants see the same minibatch stream for a given seed.
ParityResult parity_study(const Objective& oracle, const ParitySettings& settings);

void write_convergence_csv(std::ostream& os, const StudyRow& row);
void write_scaling_csv(std::ostream& os, const StudyResult& result);
void write_parity_csv(std::ostream& os, const ParityResult& result);

}  // namespace cwadam
