#pragma once

// Seeded optimizer runs and what gets logged along the way.
//
// Full logging keeps every (x_t, g_t, m_t, v_t). Thinned logging keeps the
// per-step scalars and a vector snapshot every `snapshot_every` steps.
// Summary logging keeps only the online accumulators. The pathwise checks
// (telescoping, StepReport bounds, potential identity, Hoelder) are always
// evaluated online, so no mode loses them.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cwadam/optim.hpp"
#include "cwadam/oracles.hpp"

namespace cwadam {

enum class LogMode { Auto, Full, Thinned, Summary };

std::string to_string(LogMode mode);
LogMode log_mode_from_string(const std::string& name);

inline constexpr std::int64_t kFullLogLimit = 100000;
inline constexpr double kDivergenceBound = 1e12;

struct RunOptions {
  LogMode log = LogMode::Auto;
  std::uint64_t stream = 0;
  // Empty means v0_i = zeta.
  Vec v0;
  // First t with running average gradient norm <= threshold is recorded.
  double threshold = std::numeric_limits<double>::quiet_NaN();
  // Stop once the threshold is reached (the summary then covers t_used steps).
  bool stop_at_threshold = false;
  // Approximate number of (t, running average) points kept for plotting.
  std::size_t curve_points = 1000;
};

struct StepLog {
  std::int64_t t = 0;
  Vec x;  // x_t, before the update
  Vec g;  // sampled g_t
  Vec m;  // m_t, after the update
  Vec v;  // v_t, after the update
  double f = 0.0;
  double grad_norm = 0.0;
  double surrogate_norm = 0.0;  // sqrt(beta2 * ||v_{t-1}|| + zeta)
  StepReport report;
};

struct ScalarLog {
  double f = 0.0;
  double grad_norm = 0.0;
  double surrogate_norm = 0.0;
};

struct CurvePoint {
  std::int64_t t = 0;
  double running_avg_grad_norm = 0.0;
};

struct TrajectorySummary {
  std::int64_t steps = 0;
  bool diverged = false;
  std::string divergence_reason;

  double sum_grad_norm = 0.0;
  double sum_grad_sq_over_surrogate = 0.0;
  double sum_surrogate = 0.0;
  double sum_f = 0.0;  // area under the loss curve
  std::int64_t threshold_step = -1;

  double initial_f = 0.0;
  double final_f = 0.0;          // f(x_{T+1})
  double final_grad_norm = 0.0;  // ||grad f(x_{T+1})||
  double max_abs_x = 0.0;

  Vec telescoping_lhs;  // per coordinate
  double telescoping_rhs = 0.0;
  std::int64_t telescoping_violations = 0;

  std::int64_t report_checks = 0;
  std::int64_t report_violations = 0;

  bool potential_checked = false;
  double potential_residual_max = 0.0;

  double avg_grad_norm() const;
  double avg_surrogate() const;
  double avg_grad_sq_over_surrogate() const;
  double avg_f() const;
  // (avg ||grad f||)^2 <= avg(||grad f||^2 / s) * avg(s), s the surrogate norm.
  bool holder_holds() const;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  OptimizerConfig config;
  ObjectiveSpec oracle;
  Vec x0;
  Vec v0;
  LogMode mode = LogMode::Full;
  std::int64_t snapshot_every = 1;

  std::vector<StepLog> steps;      // every step (Full) or every snapshot_every (Thinned)
  std::vector<ScalarLog> scalars;  // every step unless Summary
  std::vector<CurvePoint> curve;
  Vec x_final;
  TrajectorySummary summary;

  bool has_full_log() const { return mode == LogMode::Full; }
};

// Runs T steps of adam_step (rmsprop when config.beta1 == 0) on stochastic
// gradients drawn from make_stream(seed, options.stream). A non-finite value
// or |x_i| > 1e12 truncates the run and sets summary.diverged.
TrajectoryRecord run_trajectory(const Objective& oracle, const OptimizerConfig& config,
                                std::span<const double> x0, std::int64_t T, std::uint64_t seed,
                                const RunOptions& options = {});

double l2_norm(std::span<const double> v);

}  // namespace cwadam
