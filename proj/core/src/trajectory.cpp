#include "cwadam/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cwadam/lemmas.hpp"

namespace cwadam {

std::string to_string(LogMode mode) {
  switch (mode) {
    case LogMode::Auto: return "auto";
    case LogMode::Full: return "full";
    case LogMode::Thinned: return "thinned";
    case LogMode::Summary: return "summary";
  }
  return "auto";
}

LogMode log_mode_from_string(const std::string& name) {
  if (name == "auto") return LogMode::Auto;
  if (name == "full") return LogMode::Full;
  if (name == "thinned") return LogMode::Thinned;
  if (name == "summary") return LogMode::Summary;
  throw std::invalid_argument("unknown log mode '" + name + "'");
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double TrajectorySummary::avg_grad_norm() const {
  return steps > 0 ? sum_grad_norm / static_cast<double>(steps) : 0.0;
}

double TrajectorySummary::avg_surrogate() const {
  return steps > 0 ? sum_surrogate / static_cast<double>(steps) : 0.0;
}

double TrajectorySummary::avg_grad_sq_over_surrogate() const {
  return steps > 0 ? sum_grad_sq_over_surrogate / static_cast<double>(steps) : 0.0;
}

double TrajectorySummary::avg_f() const {
  return steps > 0 ? sum_f / static_cast<double>(steps) : 0.0;
}

bool TrajectorySummary::holder_holds() const {
  const double a = avg_grad_norm();
  return within_bound(a * a, avg_grad_sq_over_surrogate() * avg_surrogate());
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TrajectoryRecord run_trajectory(const Objective& oracle, const OptimizerConfig& config,
                                std::span<const double> x0, std::int64_t T, std::uint64_t seed,
                                const RunOptions& options) {
  if (T < 1) throw std::invalid_argument("run_trajectory needs T >= 1");
  config.validate();
  const std::size_t d = oracle.dim();
  if (x0.size() != d) throw std::invalid_argument("x0 dimension does not match the oracle");

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.stream = options.stream;
  rec.config = config;
  rec.oracle = oracle.spec();
  rec.x0.assign(x0.begin(), x0.end());
  rec.v0 = options.v0.empty() ? Vec(d, config.zeta) : options.v0;
  rec.mode = options.log;
  if (rec.mode == LogMode::Auto) rec.mode = T <= kFullLogLimit ? LogMode::Full : LogMode::Thinned;
  rec.snapshot_every = rec.mode == LogMode::Thinned ? std::max<std::int64_t>(1, T / 1000) : 1;

  OptimizerState state = init_state(config, rec.x0, rec.v0);
  Engine rng = make_stream(seed, options.stream);

  const std::int64_t curve_stride = std::max<std::int64_t>(
      1, T / std::max<std::int64_t>(1, static_cast<std::int64_t>(options.curve_points)));
  const bool track_potential =
      config.variant == Variant::Modified && config.beta1 < std::sqrt(config.beta2);
  const bool check_reports = config.variant == Variant::Modified;

  TrajectorySummary& sum = rec.summary;
  TelescopingTracker tele(d, config);
  sum.potential_checked = track_potential;

  if (rec.mode == LogMode::Full) rec.steps.reserve(static_cast<std::size_t>(T));
  if (rec.mode != LogMode::Summary) rec.scalars.reserve(static_cast<std::size_t>(T));

  Vec grad(d), g(d), x_prev(rec.x0), m_prev(d, 0.0), v_prev(d), x_t(d);
  for (std::int64_t t = 1; t <= T; ++t) {
    x_t = state.x;
    v_prev = state.v;
    const double f = oracle.value(x_t);
    oracle.gradient(x_t, grad);
    oracle.sample(x_t, rng, g);
    if (!std::isfinite(f) || !all_finite(grad) || !all_finite(g)) {
      sum.diverged = true;
      sum.divergence_reason = "non-finite oracle output at t=" + std::to_string(t);
      break;
    }
    if (t == 1) sum.initial_f = f;
    const double gn = l2_norm(grad);
    const double sur = std::sqrt(config.beta2 * l2_norm(v_prev) + config.zeta);

    const StepReport report = adam_step(state, config, g);

    ++sum.steps;
    sum.sum_grad_norm += gn;
    sum.sum_grad_sq_over_surrogate += gn * gn / sur;
    sum.sum_surrogate += sur;
    sum.sum_f += f;
    tele.add(v_prev, state.v);
    if (check_reports) {
      ++sum.report_checks;
      if (!report_violations(report, config).empty()) ++sum.report_violations;
    }
    if (track_potential) {
      const auto p = potential_identity_step(x_prev, x_t, state.x, g, m_prev, state.m, v_prev,
                                             state.v, config);
      sum.potential_residual_max = std::max(sum.potential_residual_max, p.residual_rel);
    }

    if (rec.mode == LogMode::Full ||
        (rec.mode == LogMode::Thinned && (t - 1) % rec.snapshot_every == 0)) {
      rec.steps.push_back({t, x_t, g, state.m, state.v, f, gn, sur, report});
    }
    if (rec.mode != LogMode::Summary) rec.scalars.push_back({f, gn, sur});

    const double running = sum.sum_grad_norm / static_cast<double>(t);
    if (t == 1 || t % curve_stride == 0 || t == T) rec.curve.push_back({t, running});
    const bool reached = !std::isnan(options.threshold) && running <= options.threshold;
    if (reached && sum.threshold_step < 0) sum.threshold_step = t;

    sum.max_abs_x = std::max(sum.max_abs_x, max_abs(state.x));
    if (!all_finite(state.x) || sum.max_abs_x > kDivergenceBound) {
      sum.diverged = true;
      sum.divergence_reason = "iterate left the finite region at t=" + std::to_string(t);
      break;
    }
    if (reached && options.stop_at_threshold) {
      if (rec.curve.back().t != t) rec.curve.push_back({t, running});
      break;
    }
    x_prev = x_t;
    m_prev = state.m;
  }

  rec.x_final = state.x;
  sum.telescoping_lhs = tele.lhs();
  sum.telescoping_rhs = tele.rhs();
  sum.telescoping_violations = tele.violations();
  if (all_finite(state.x)) {
    sum.final_f = oracle.value(state.x);
    sum.final_grad_norm = l2_norm(oracle.grad(state.x));
  } else {
    sum.final_f = std::numeric_limits<double>::quiet_NaN();
    sum.final_grad_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

}  // namespace cwadam
