#include "cwadam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "cwadam/io.hpp"

namespace cwadam {

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        task(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double s = 0.0;
  for (double v : values) s += v;
  out.mean = s / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("slope needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw std::invalid_argument("log-log slope needs positive data");
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double stage2_gain(const ProblemConstants& pc, double beta2) {
  return 2.0 * std::sqrt(static_cast<double>(pc.d) * pc.d1) / std::sqrt(1.0 - beta2);
}

double stage2_offset(const ProblemConstants& pc) {
  return std::sqrt(pc.zeta) + static_cast<double>(pc.d) * std::sqrt(pc.d0 + pc.v0_norm);
}

StudyRow monte_carlo_convergence(const Objective& oracle, double eps,
                                 const StudySettings& settings) {
  if (settings.seeds < 1) throw std::invalid_argument("a study needs at least one seed");
  const Vec x1 = settings.x1.empty() ? Vec(oracle.dim(), 0.0) : settings.x1;
  const ProblemConstants pc = problem_constants(oracle, x1, settings.zeta, settings.v0);

  StudyRow row;
  row.eps = eps;
  row.schedule = settings.optimizer == ScheduleKind::Adam
                     ? adam_schedule(eps, settings.beta1, pc, settings.eta_override)
                     : rmsprop_schedule(eps, pc, settings.eta_override);
  row.predicted_bound = row.schedule.predicted_bound;
  row.horizon = row.schedule.t_min;
  if (settings.max_steps > 0) row.horizon = std::min(row.horizon, settings.max_steps);
  row.seeds = settings.seeds;

  OptimizerConfig config;
  config.eta = row.schedule.eta;
  config.beta1 = row.schedule.beta1;
  config.beta2 = row.schedule.beta2;
  config.zeta = settings.zeta;
  config.variant = Variant::Modified;
  config.check_invariants = settings.strict;

  RunOptions opts;
  opts.log = settings.log;
  opts.v0 = settings.v0;
  opts.threshold = row.predicted_bound;
  opts.stop_at_threshold = settings.stop_at_threshold;

  row.per_seed.resize(static_cast<std::size_t>(settings.seeds));
  parallel_for(row.per_seed.size(), settings.jobs, [&](std::size_t k) {
    RunOptions o = opts;
    o.stream = k;
    TrajectoryRecord rec = run_trajectory(oracle, config, x1, row.horizon, settings.master_seed, o);
    row.per_seed[k] = {static_cast<std::int64_t>(k), std::move(rec.summary), std::move(rec.curve)};
  });

  // Reduction in seed order.
  const double gain = stage2_gain(pc, config.beta2);
  const double offset = stage2_offset(pc);
  row.stage2_gain = gain;
  row.stage2_offset = offset;
  std::vector<double> avg, lhs, rhs, diff, tstep, used;
  for (const auto& s : row.per_seed) {
    const auto& sum = s.summary;
    if (sum.diverged) {
      ++row.diverged;
      continue;
    }
    avg.push_back(sum.avg_grad_norm());
    lhs.push_back(sum.avg_surrogate());
    rhs.push_back(offset + gain * sum.avg_grad_norm());
    diff.push_back(lhs.back() - rhs.back());
    if (diff.back() > 0.0) ++row.stage2_pathwise_violations;
    if (!sum.holder_holds()) ++row.holder_violations;
    row.telescoping_violations += sum.telescoping_violations;
    row.report_violations += sum.report_violations;
    row.report_checks += sum.report_checks;
    if (sum.potential_checked) {
      row.potential_residual_max = std::max(row.potential_residual_max, sum.potential_residual_max);
    }
    if (sum.threshold_step > 0) ++row.threshold_reached;
    tstep.push_back(static_cast<double>(sum.threshold_step > 0 ? sum.threshold_step : row.horizon));
    used.push_back(static_cast<double>(sum.steps));
    row.max_abs_x = std::max(row.max_abs_x, sum.max_abs_x);
  }
  row.avg_grad_norm = mean_se(avg);
  row.stage2_lhs = mean_se(lhs);
  row.stage2_rhs = mean_se(rhs);
  row.stage2_diff = mean_se(diff);
  row.stage2_holds = !diff.empty() && row.stage2_diff.mean <= 2.0 * row.stage2_diff.se;
  row.threshold_step = mean_se(tstep);
  row.t_used = mean_se(used);
  row.bound_holds = !avg.empty() && row.avg_grad_norm.mean <= row.predicted_bound;
  row.divergence_failure = static_cast<double>(row.diverged) > 0.1 * static_cast<double>(row.seeds);
  return row;
}

StudyResult scaling_study(const Objective& oracle, const std::vector<double>& eps_list,
                          const StudySettings& settings) {
  if (eps_list.size() < 3) throw std::invalid_argument("scaling study needs at least three eps values");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) {
      throw std::invalid_argument("eps values must be strictly decreasing");
    }
  }
  StudyResult out;
  std::vector<double> inv_eps, t_sched, t_emp;
  for (double eps : eps_list) {
    out.rows.push_back(monte_carlo_convergence(oracle, eps, settings));
    inv_eps.push_back(1.0 / eps);
    t_sched.push_back(static_cast<double>(out.rows.back().schedule.t_min));
    t_emp.push_back(out.rows.back().threshold_step.mean);
  }
  out.schedule_slope = log_log_slope(inv_eps, t_sched);
  out.empirical_slope = log_log_slope(inv_eps, t_emp);
  return out;
}

namespace {

ParityArm run_arm(const Objective& oracle, const ParitySettings& s, Variant variant) {
  OptimizerConfig config;
  config.eta = s.eta;
  config.beta1 = s.beta1;
  config.beta2 = s.beta2;
  config.zeta = s.zeta;
  config.lambda = s.lambda;
  config.variant = variant;
  const Vec x0 = s.x0.empty() ? Vec(oracle.dim(), 0.0) : s.x0;

  ParityArm arm;
  arm.variant = variant;
  std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(s.seeds));
  parallel_for(recs.size(), s.jobs, [&](std::size_t k) {
    RunOptions o;
    o.log = LogMode::Thinned;
    o.stream = k;
    recs[k] = run_trajectory(oracle, config, x0, s.steps, s.master_seed, o);
  });
  for (auto& r : recs) {
    if (r.summary.diverged) {
      ++arm.diverged;
      continue;
    }
    arm.final_losses.push_back(r.summary.final_f);
    arm.loss_areas.push_back(r.summary.avg_f());
    arm.curves.push_back(std::move(r.curve));
    std::vector<double> losses;
    losses.reserve(r.scalars.size());
    for (const auto& sc : r.scalars) losses.push_back(sc.f);
    arm.loss_curves.push_back(std::move(losses));
  }
  arm.final_loss = mean_se(arm.final_losses);
  arm.loss_area = mean_se(arm.loss_areas);
  return arm;
}

}  // namespace

ParityResult parity_study(const Objective& oracle, const ParitySettings& settings) {
  if (settings.seeds < 1 || settings.steps < 1) {
    throw std::invalid_argument("parity study needs seeds >= 1 and steps >= 1");
  }
  ParityResult r;
  r.modified = run_arm(oracle, settings, Variant::Modified);
  r.original = run_arm(oracle, settings, Variant::Original);
  const double lo = r.original.final_loss.mean;
  r.relative_gap = std::abs(r.modified.final_loss.mean - lo) / std::abs(lo);
  const double ao = r.original.loss_area.mean;
  r.area_relative_gap = std::abs(r.modified.loss_area.mean - ao) / std::abs(ao);
  return r;
}

void write_convergence_csv(std::ostream& os, const StudyRow& row) {
  csv_row(os, "row", "seed", "eps", "steps", "avg_grad_norm", "avg_grad_norm_se",
          "predicted_bound", "bound_holds", "stage2_lhs", "stage2_rhs", "stage2_holds",
          "holder_holds", "telescoping_violations", "report_violations",
          "potential_residual_max", "threshold_step", "final_f", "max_abs_x", "diverged");
  for (const auto& s : row.per_seed) {
    const auto& m = s.summary;
    const double lhs = m.avg_surrogate();
    const double rhs = row.stage2_offset + row.stage2_gain * m.avg_grad_norm();
    csv_row(os, "seed", s.index, row.eps, m.steps, m.avg_grad_norm(), 0.0, row.predicted_bound,
            m.avg_grad_norm() <= row.predicted_bound, lhs, rhs, lhs <= rhs, m.holder_holds(),
            m.telescoping_violations, m.report_violations, m.potential_residual_max,
            m.threshold_step, m.final_f, m.max_abs_x, m.diverged);
  }
  csv_row(os, "aggregate", row.seeds, row.eps, row.horizon, row.avg_grad_norm.mean,
          row.avg_grad_norm.se, row.predicted_bound, row.bound_holds, row.stage2_lhs.mean,
          row.stage2_rhs.mean, row.stage2_holds, row.holder_violations == 0,
          row.telescoping_violations, row.report_violations, row.potential_residual_max,
          row.threshold_step.mean, "", row.max_abs_x, row.diverged);
}

void write_scaling_csv(std::ostream& os, const StudyResult& result) {
  csv_row(os, "row", "eps", "t_min", "eta", "beta2", "horizon", "avg_grad_norm",
          "avg_grad_norm_se", "predicted_bound", "threshold_step", "threshold_step_se",
          "threshold_reached", "seeds", "stage2_lhs", "stage2_rhs", "stage2_holds", "slope");
  for (const auto& r : result.rows) {
    csv_row(os, "eps", r.eps, r.schedule.t_min, r.schedule.eta, r.schedule.beta2, r.horizon,
            r.avg_grad_norm.mean, r.avg_grad_norm.se, r.predicted_bound, r.threshold_step.mean,
            r.threshold_step.se, r.threshold_reached, r.seeds, r.stage2_lhs.mean,
            r.stage2_rhs.mean, r.stage2_holds, "");
  }
  csv_row(os, "schedule_slope", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "",
          result.schedule_slope);
  csv_row(os, "empirical_slope", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "",
          result.empirical_slope);
}

void write_parity_csv(std::ostream& os, const ParityResult& result) {
  csv_row(os, "row", "variant", "seed", "final_loss", "final_loss_se", "loss_area",
          "loss_area_se", "gap");
  for (const ParityArm* arm : {&result.modified, &result.original}) {
    for (std::size_t k = 0; k < arm->final_losses.size(); ++k) {
      csv_row(os, "seed", to_string(arm->variant), static_cast<std::uint64_t>(k),
              arm->final_losses[k], "", arm->loss_areas[k], "", "");
    }
    csv_row(os, "mean", to_string(arm->variant), "", arm->final_loss.mean, arm->final_loss.se,
            arm->loss_area.mean, arm->loss_area.se, "");
  }
  csv_row(os, "gap", "", "", "", "", "", "", result.relative_gap);
}

}  // namespace cwadam
