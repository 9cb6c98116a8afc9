#include "cwadam/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cwadam/io.hpp"

namespace cwadam {

void SequenceCase::validate() const {
  if (c.empty()) throw std::invalid_argument("sequence case needs T >= 1");
  for (double ct : c) {
    if (!(ct >= 0.0) || !std::isfinite(ct)) {
      throw std::invalid_argument("sequence values c_t must be finite and nonnegative");
    }
  }
  if (!(a0 > 0.0) || !std::isfinite(a0)) throw std::invalid_argument("a0 must be positive");
  if (!(zeta >= 0.0)) throw std::invalid_argument("zeta must be nonnegative");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
}

BoundCheck make_check(double lhs, double rhs) {
  return {lhs, rhs, rhs - lhs, within_bound(lhs, rhs)};
}

namespace {

void require_square(const SequenceCase& c) {
  c.validate();
  if (!(c.beta1 * c.beta1 < c.beta2)) {
    throw std::invalid_argument("lemma requires beta1^2 < beta2");
  }
}

void require_fourth(const SequenceCase& c) {
  c.validate();
  const double b1sq = c.beta1 * c.beta1;
  if (!(b1sq * b1sq < c.beta2)) throw std::invalid_argument("lemma requires beta1^4 < beta2");
}

BoundCheck momentum_ratio_impl(const SequenceCase& c, double root_exponent) {
  require_square(c);
  double a = c.a0;
  double b = c.b0;
  double lhs = 0.0;
  for (double ct : c.c) {
    a = c.beta2 * a + (1.0 - c.beta2) * ct * ct;
    b = c.beta1 * b + (1.0 - c.beta1) * ct;
    lhs = std::max(lhs, b / std::sqrt(a + c.zeta));
  }
  const double rhs = (1.0 - c.beta1) / (std::pow(1.0 - c.beta2, root_exponent) *
                                        std::sqrt(1.0 - c.beta1 * c.beta1 / c.beta2));
  return make_check(lhs, rhs);
}

}  // namespace

BoundCheck check_momentum_ratio(const SequenceCase& c) { return momentum_ratio_impl(c, 0.5); }

BoundCheck check_momentum_ratio_injected(const SequenceCase& c) {
  return momentum_ratio_impl(c, -0.5);
}

BoundCheck check_sum_ratio_log(const SequenceCase& c) {
  require_square(c);
  double a = c.a0;
  double b = c.b0;
  double lhs = 0.0;
  // ln(a_T/a_0) - T ln(beta2) summed as nonnegative increments, so a zero
  // sequence gives exactly 0 instead of cancellation noise.
  double log_excess = 0.0;
  for (double ct : c.c) {
    const double decayed = c.beta2 * a;
    const double fresh = (1.0 - c.beta2) * ct * ct;
    a = decayed + fresh;
    b = c.beta1 * b + (1.0 - c.beta1) * ct;
    lhs += b * b / a;
    log_excess += std::log1p(fresh / decayed);
  }
  const double k = 1.0 - c.beta1 / std::sqrt(c.beta2);
  const double factor = (1.0 - c.beta1) * (1.0 - c.beta1) / (k * k * (1.0 - c.beta2));
  const double rhs = factor * log_excess;
  return make_check(lhs, rhs);
}

BoundCheck check_sum_ratio_sqrt(const SequenceCase& c) {
  require_fourth(c);
  double a = c.a0;
  double b = c.b0;
  double lhs = 0.0;
  double sum_sqrt_prev = 0.0;
  for (double ct : c.c) {
    sum_sqrt_prev += std::sqrt(a);
    a = c.beta2 * a + (1.0 - c.beta2) * ct * ct;
    b = c.beta1 * b + (1.0 - c.beta1) * ct;
    lhs += b * b / std::sqrt(a);
  }
  const double q = 1.0 - c.beta1 / std::pow(c.beta2, 0.25);
  const double factor = (1.0 - c.beta1) * (1.0 - c.beta1) / (q * q);
  const double rhs =
      factor * (2.0 / (1.0 - c.beta2) * (std::sqrt(a) - std::sqrt(c.a0)) + 2.0 * sum_sqrt_prev);
  return make_check(lhs, rhs);
}

SequenceCase random_sequence_case(Engine& rng, bool fourth_root, std::int64_t max_T) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> length(1, max_T);
  SequenceCase sc;
  const auto T = length(rng);

  // beta2 spread over 1 - 10^-[0.05, 4] so both short and long memories occur.
  sc.beta2 = 1.0 - std::pow(10.0, -(0.05 + 3.95 * unit(rng)));
  const double cap = fourth_root ? std::pow(sc.beta2, 0.25) : std::sqrt(sc.beta2);
  const double u = unit(rng);
  sc.beta1 = u < 0.1 ? 0.0 : cap * unit(rng);

  sc.a0 = unit(rng) < 0.3 ? std::pow(10.0, -8.0 * unit(rng)) : 1.0 - unit(rng);
  sc.zeta = unit(rng) < 0.2 ? 0.0 : std::pow(10.0, -8.0 + 8.0 * unit(rng));

  sc.c.resize(static_cast<std::size_t>(T));
  const int style = static_cast<int>(4.0 * unit(rng));
  for (std::size_t t = 0; t < sc.c.size(); ++t) {
    double v;
    switch (style) {
      case 0: v = 10.0 * unit(rng); break;
      case 1: v = unit(rng) < 0.05 ? 10.0 * unit(rng) : 0.0; break;          // sparse spikes
      case 2: v = 10.0 * std::pow(0.97, static_cast<double>(t)) * unit(rng); break;  // decaying
      default: v = (t % 2 == 0) ? 10.0 : 0.0;                                  // alternating
    }
    sc.c[t] = std::min(10.0, std::max(0.0, v));
  }
  return sc;
}

double telescoping_rhs(const OptimizerConfig& config, std::int64_t T) {
  const double rz = std::sqrt(config.zeta);
  return 1.0 / rz + static_cast<double>(T) * (1.0 - std::sqrt(config.beta2)) / rz;
}

namespace {

void require_full(const TrajectoryRecord& r, const char* what) {
  if (!r.has_full_log()) {
    throw std::invalid_argument(std::string(what) + " needs a fully logged trajectory");
  }
}

const Vec& v_before(const TrajectoryRecord& r, std::size_t step_index) {
  return step_index == 0 ? r.v0 : r.steps[step_index - 1].v;
}

const Vec& x_after(const TrajectoryRecord& r, std::size_t step_index) {
  return step_index + 1 < r.steps.size() ? r.steps[step_index + 1].x : r.x_final;
}

}  // namespace

BoundCheck check_telescoping(const TrajectoryRecord& record, const OptimizerConfig& config,
                             std::size_t i) {
  require_full(record, "check_telescoping");
  if (i >= record.v0.size()) throw std::out_of_range("coordinate index out of range");
  double lhs = 0.0;
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const double vp = v_before(record, k)[i];
    const double vt = record.steps[k].v[i];
    lhs += 1.0 / std::sqrt(config.beta2 * vp + config.zeta) - 1.0 / std::sqrt(vt + config.zeta);
  }
  return make_check(lhs, telescoping_rhs(config, static_cast<std::int64_t>(record.steps.size())));
}

std::vector<double> descent_residual(const TrajectoryRecord& record, const Objective& oracle,
                                     const SmoothnessModel& smooth) {
  require_full(record, "descent_residual");
  const double d = static_cast<double>(oracle.dim());
  std::vector<double> out;
  out.reserve(record.steps.size());
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const Vec& xt = record.steps[k].x;
    const Vec& xn = x_after(record, k);
    const Vec grad = oracle.grad(xt);
    Vec dx(xt.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = xn[i] - xt[i];
    const double step = l2_norm(dx);
    double r = oracle.value(xt) - oracle.value(xn);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      r += (smooth.l0 / (2.0 * std::sqrt(d)) + smooth.l1 * std::abs(grad[i]) / 2.0) * step *
           std::abs(dx[i]);
      r -= grad[i] * (xt[i] - xn[i]);
    }
    out.push_back(r);
  }
  return out;
}

SurrogateSplit surrogate_split(std::span<const double> grad, std::span<const double> g,
                               std::span<const double> v_prev, const OptimizerConfig& config) {
  SurrogateSplit s;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double vt = config.beta2 * v_prev[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double a = config.eta * g[i] / std::sqrt(config.beta2 * v_prev[i] + config.zeta);
    const double b = config.eta * g[i] / std::sqrt(vt + config.zeta);
    s.first_a += grad[i] * a;
    s.first_b += grad[i] * (b - a);
  }
  return s;
}

SurrogateSplit surrogate_decomposition(const TrajectoryRecord& record, const Objective& oracle,
                                       std::int64_t t) {
  require_full(record, "surrogate_decomposition");
  if (t < 1 || t > static_cast<std::int64_t>(record.steps.size())) {
    throw std::out_of_range("step index out of range");
  }
  const auto k = static_cast<std::size_t>(t - 1);
  const Vec grad = oracle.grad(record.steps[k].x);
  return surrogate_split(grad, record.steps[k].g, v_before(record, k), record.config);
}

PotentialTerms potential_terms(std::span<const double> g_t, std::span<const double> m_prev,
                               std::span<const double> m_t, std::span<const double> v_prev,
                               std::span<const double> v_t, const OptimizerConfig& config) {
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double eta = config.eta;
  const double c1 = 1.0 - b1 / std::sqrt(b2);
  const std::size_t d = g_t.size();
  PotentialTerms p{Vec(d), Vec(d), Vec(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double sur = std::sqrt(b2 * v_prev[i] + config.zeta);
    p.main[i] = -eta * (1.0 - b1) * g_t[i] / sur / c1;
    p.surrogate[i] = (-eta * m_t[i] / std::sqrt(v_t[i] + config.zeta) + eta * m_t[i] / sur) / c1;
    p.zeta_mismatch[i] = (eta * b1 * m_prev[i] / std::sqrt(b2 * v_prev[i] + b2 * config.zeta) -
                          eta * b1 * m_prev[i] / sur) /
                         c1;
  }
  return p;
}

PotentialStep potential_identity_step(std::span<const double> x_prev, std::span<const double> x_t,
                                      std::span<const double> x_next, std::span<const double> g_t,
                                      std::span<const double> m_prev, std::span<const double> m_t,
                                      std::span<const double> v_prev, std::span<const double> v_t,
                                      const OptimizerConfig& config) {
  const double k = config.beta1 / std::sqrt(config.beta2);
  const double c1 = 1.0 - k;
  const PotentialTerms p = potential_terms(g_t, m_prev, m_t, v_prev, v_t, config);
  PotentialStep out;
  double scale = 0.0;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double u_t = (x_t[i] - k * x_prev[i]) / c1;
    const double u_n = (x_next[i] - k * x_t[i]) / c1;
    const double sum = p.main[i] + p.surrogate[i] + p.zeta_mismatch[i];
    out.residual_abs = std::max(out.residual_abs, std::abs((u_n - u_t) - sum));
    scale = std::max(scale, std::abs(u_t) + std::abs(u_n) + std::abs(p.main[i]) +
                                std::abs(p.surrogate[i]) + std::abs(p.zeta_mismatch[i]));
  }
  out.residual_rel = scale > 0.0 ? out.residual_abs / scale : out.residual_abs;
  return out;
}

PotentialSequence potential_sequence(const TrajectoryRecord& record, const OptimizerConfig& config) {
  require_full(record, "potential_sequence");
  if (!(config.beta1 < std::sqrt(config.beta2))) {
    throw std::invalid_argument("potential function requires beta1 < sqrt(beta2)");
  }
  const double k = config.beta1 / std::sqrt(config.beta2);
  const double c1 = 1.0 - k;
  PotentialSequence out;
  const std::size_t T = record.steps.size();
  if (T == 0) return out;
  const std::size_t d = record.x0.size();
  const Vec zeros(d, 0.0);

  auto u_of = [&](const Vec& x, const Vec& xp) {
    Vec u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = (x[i] - k * xp[i]) / c1;
    return u;
  };
  out.u.push_back(u_of(record.steps[0].x, record.steps[0].x));
  for (std::size_t s = 0; s < T; ++s) {
    const Vec& xp = s == 0 ? record.steps[0].x : record.steps[s - 1].x;
    const Vec& xt = record.steps[s].x;
    const Vec& xn = x_after(record, s);
    out.u.push_back(u_of(xn, xt));
    const Vec& mp = s == 0 ? zeros : record.steps[s - 1].m;
    const auto step = potential_identity_step(xp, xt, xn, record.steps[s].g, mp, record.steps[s].m,
                                              v_before(record, s), record.steps[s].v, config);
    out.residual.push_back(step.residual_rel);
    out.max_residual = std::max(out.max_residual, step.residual_rel);
  }
  return out;
}

FirstOrderBDiagnostic first_order_b_diagnostic(const Objective& oracle,
                                               const OptimizerConfig& config,
                                               std::span<const double> x_prev,
                                               std::span<const double> x_t,
                                               std::span<const double> v_prev,
                                               std::int64_t n_samples, Engine& rng, double alpha0,
                                               double alpha1) {
  if (n_samples < 2) throw std::invalid_argument("first-order.b diagnostic needs >= 2 samples");
  const std::size_t d = oracle.dim();
  const double dd = static_cast<double>(d);
  const double eta = config.eta;
  const double b2 = config.beta2;
  const double D0 = oracle.noise().d0;
  const double D1 = oracle.noise().d1;
  const double L0 = oracle.smooth().l0;
  const double L1 = oracle.smooth().l1;

  const Vec grad = oracle.grad(x_t);
  const Vec grad_prev = oracle.grad(x_prev);
  Vec sur(d);
  for (std::size_t i = 0; i < d; ++i) sur[i] = std::sqrt(b2 * v_prev[i] + config.zeta);

  // Parts of the bracket that do not depend on the sample.
  double fixed = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double gi2 = grad[i] * grad[i];
    fixed += eta * gi2 / (2.0 * alpha0 * sur[i]);
    fixed += eta * alpha0 / (2.0 * sur[i]) *
             (gi2 / alpha1 + alpha1 * dd * D1 * D1 * L0 * L0 * eta * eta / (1.0 - b2) +
              2.0 * std::sqrt(dd) * eta * L1 * D1 * gi2 / std::sqrt(1.0 - b2));
  }

  double sum_b = 0.0, sum_b2 = 0.0, sum_k = 0.0, sum_k2 = 0.0, sum_s = 0.0, sum_s2 = 0.0;
  Vec g(d);
  for (std::int64_t n = 0; n < n_samples; ++n) {
    oracle.sample(x_t, rng, g);
    double fb = 0.0;
    double bracket = fixed;
    for (std::size_t i = 0; i < d; ++i) {
      const double vt = b2 * v_prev[i] + (1.0 - b2) * g[i] * g[i];
      const double den = std::sqrt(vt + config.zeta);
      fb += grad[i] * (eta * g[i] / den - eta * g[i] / sur[i]);
      bracket += eta * alpha0 * D0 / 2.0 * (1.0 / sur[i] - 1.0 / den);
      bracket += eta * alpha0 * D1 / 2.0 *
                 (grad_prev[i] * grad_prev[i] / sur[i] - grad[i] * grad[i] / den);
    }
    sum_b += fb;
    sum_b2 += fb * fb;
    sum_k += bracket;
    sum_k2 += bracket * bracket;
    sum_s += fb + bracket;
    sum_s2 += (fb + bracket) * (fb + bracket);
  }
  const double n = static_cast<double>(n_samples);
  auto se = [n](double s, double s2) {
    const double mean = s / n;
    return std::sqrt(std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0)) / n);
  };
  FirstOrderBDiagnostic out;
  out.samples = n_samples;
  out.first_b_mean = sum_b / n;
  out.first_b_se = se(sum_b, sum_b2);
  out.lower_bound = -sum_k / n;
  out.lower_bound_se = se(sum_k, sum_k2);
  out.slack = sum_s / n;
  out.slack_se = se(sum_s, sum_s2);
  return out;
}

TelescopingTracker::TelescopingTracker(std::size_t d, const OptimizerConfig& config)
    : config_(config), lhs_(d, 0.0) {}

void TelescopingTracker::add(std::span<const double> v_prev, std::span<const double> v_t) {
  for (std::size_t i = 0; i < lhs_.size(); ++i) {
    lhs_[i] += 1.0 / std::sqrt(config_.beta2 * v_prev[i] + config_.zeta) -
               1.0 / std::sqrt(v_t[i] + config_.zeta);
  }
  ++steps_;
}

double TelescopingTracker::rhs() const { return telescoping_rhs(config_, steps_); }

std::int64_t TelescopingTracker::violations() const {
  const double r = rhs();
  std::int64_t n = 0;
  for (double l : lhs_) n += within_bound(l, r) ? 0 : 1;
  return n;
}

void write_sequence_csv_header(std::ostream& os) {
  csv_row(os, "lemma", "case", "T", "beta1", "beta2", "a0", "b0", "zeta", "lhs", "rhs", "slack",
          "holds");
}

void write_sequence_csv_row(std::ostream& os, const SequenceCaseRow& row) {
  csv_row(os, row.lemma, row.index, static_cast<std::int64_t>(row.c.c.size()), row.c.beta1,
          row.c.beta2, row.c.a0, row.c.b0, row.c.zeta, row.check.lhs, row.check.rhs,
          row.check.slack, row.check.holds);
}

std::string serialize_case(const SequenceCase& c) {
  std::ostringstream os;
  os << "beta1=" << csv_cell(c.beta1) << ";beta2=" << csv_cell(c.beta2)
     << ";a0=" << csv_cell(c.a0) << ";b0=" << csv_cell(c.b0) << ";zeta=" << csv_cell(c.zeta)
     << ";c=";
  for (std::size_t t = 0; t < c.c.size(); ++t) {
    if (t) os << ' ';
    os << csv_cell(c.c[t]);
  }
  return os.str();
}

}  // namespace cwadam
