#include "cwadam/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cwadam/io.hpp"
#include "cwadam/trajectory.hpp"

namespace cwadam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// num / den with a vanishing denominator read as an absent constraint.
double ceiling(double num, double den) { return den > 0.0 ? num / den : kInf; }

void require_finite_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be finite and nonnegative");
  }
}

std::int64_t round_up_steps(double t) {
  if (!std::isfinite(t) || t > 9.0e18) throw std::overflow_error("iteration count overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t)));
}

}  // namespace

void ProblemConstants::validate() const {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  require_finite_nonneg(l0, "L0");
  require_finite_nonneg(l1, "L1");
  require_finite_nonneg(d0, "D0");
  require_finite_nonneg(d1, "D1");
  require_finite_nonneg(grad1_sq, "grad1_sq");
  require_finite_nonneg(v0_norm, "v0_norm");
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("zeta must be positive");
  if (!std::isfinite(f1) || !std::isfinite(f_star) || !std::isfinite(v0_log_sum)) {
    throw std::invalid_argument("f1, f_star and v0_log_sum must be finite");
  }
  if (f1 < f_star) throw std::invalid_argument("f1 is below the lower bound f_star");
}

ProblemConstants problem_constants(const Objective& oracle, std::span<const double> x1,
                                   double zeta, std::span<const double> v0) {
  ProblemConstants pc;
  pc.d = oracle.dim();
  pc.l0 = oracle.smooth().l0;
  pc.l1 = oracle.smooth().l1;
  pc.d0 = oracle.noise().d0;
  pc.d1 = oracle.noise().d1;
  pc.zeta = zeta;
  const auto e = oracle.eval(x1);
  pc.f1 = e.f;
  pc.grad1_sq = l2_norm(e.grad) * l2_norm(e.grad);
  pc.f_star = oracle.f_inf();
  const Vec v = v0.empty() ? Vec(pc.d, zeta) : Vec(v0.begin(), v0.end());
  if (v.size() != pc.d) throw std::invalid_argument("v0 dimension does not match the oracle");
  pc.v0_norm = l2_norm(v);
  for (double vi : v) pc.v0_log_sum += std::log(vi);
  pc.validate();
  return pc;
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::Adam ? "adam" : "rmsprop"; }

ScheduleResult rmsprop_schedule(double eps, const ProblemConstants& pc,
                                std::optional<double> eta_override) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  pc.validate();
  const double d = static_cast<double>(pc.d);
  const double rz = std::sqrt(pc.zeta);
  const double qz = std::sqrt(rz);
  const double D0 = pc.d0, D1 = pc.d1, L0 = pc.l0, L1 = pc.l1;

  const double omb2 = std::min(ceiling(1.0, 7.0 * D1), ceiling(rz * eps * eps, 35.0 * d * D0));
  if (!std::isfinite(omb2) || !(omb2 < 1.0)) {
    throw std::invalid_argument("noise constants leave 1 - beta2 outside (0, 1)");
  }

  const double lam1 = ceiling(1.0, std::max(14.0 * L1 * std::sqrt(d) * D1,
                                            7.0 * L1 * std::sqrt(d * D1)));
  const double lam2 = std::min(ceiling(pc.zeta, 35.0 * L0 * d * D0),
                               ceiling(rz, 35.0 * L1 * L1 * std::pow(d, 1.5) * D0));
  const double lam3 = ceiling(qz, 7.0 * D1 * L0 * d * std::sqrt(5.0));
  const double e1 = ceiling(rz, 7.0 * L0 * D1);
  const double e2 = lam1 * std::sqrt(omb2);
  const double e3 = omb2 / (7.0 * std::sqrt(d));
  const double e4 = lam2 * eps * eps;
  const double e5 = lam3 * eps * std::sqrt(omb2);
  const double eta_max = std::min({e1, e2, e3, e4, e5});
  if (!std::isfinite(eta_max) || !(eta_max > 0.0)) {
    throw std::invalid_argument("step-size ceiling is not finite and positive");
  }
  double eta = eta_max;
  if (eta_override) {
    if (!(*eta_override > 0.0) || *eta_override > eta_max) {
      throw std::invalid_argument("eta override must lie in (0, admissible ceiling]");
    }
    eta = *eta_override;
  }

  const double alpha0 = 1.0;
  const double c = rz + d * std::sqrt(D0 + pc.v0_norm);
  const double delta = pc.f1 - pc.f_star + eta * alpha0 * d * D0 / (2.0 * rz) +
                       eta * alpha0 * D1 * pc.grad1_sq / (2.0 * rz);

  ScheduleResult r;
  r.kind = ScheduleKind::RMSProp;
  r.eps = eps;
  r.beta1 = 0.0;
  r.beta2 = 1.0 - omb2;
  r.eta = eta;
  r.eta_ceiling = eta_max;
  r.t_min_real = 70.0 * delta / (eta * eps * eps);
  r.t_min = round_up_steps(r.t_min_real);
  r.predicted_bound = (2.0 * d * std::sqrt(35.0 * D0 * D1) / qz + std::sqrt(c)) * eps;
  r.in_regime = D1 == 0.0 || eps <= std::sqrt(5.0 * d * D0) / (std::sqrt(D1) * qz);
  r.constants = {{"alpha0", alpha0},   {"c", c},
                 {"Delta", delta},     {"Lambda1", lam1},
                 {"Lambda2", lam2},    {"Lambda3", lam3},
                 {"one_minus_beta2", omb2}, {"eta_cap_zeta", e1},
                 {"eta_cap_lambda1", e2},   {"eta_cap_dim", e3},
                 {"eta_cap_lambda2", e4},   {"eta_cap_lambda3", e5}};
  return r;
}

std::map<std::string, double> adam_constants(double eps, double beta1, double beta2,
                                             const ProblemConstants& pc) {
  const double d = static_cast<double>(pc.d);
  const double b1 = beta1;
  const double rz = std::sqrt(pc.zeta);
  const double D0 = pc.d0, D1 = pc.d1, L0 = pc.l0, L1 = pc.l1;

  const double C1 = 1.0 - b1 / std::sqrt(beta2);
  const double C2 = std::sqrt(1.0 - b1 * b1 / beta2);
  const double q = 1.0 - b1 / std::pow(beta2, 0.25);
  const double omb1 = 1.0 - b1;

  const double a0 = 21.0 / (2.0 * C2);
  const double a1 = 21.0 * a0 / (2.0 * C2);
  const double a3 = 7.0 * b1 * rz / (2.0 * C2);
  const double a4 = 14.0 * L1 * std::sqrt(d) * (2.0 - C1) * (2.0 - C1) / (C1 * omb1);

  const double k = 1.0 - C1;
  const double C3 = 2.0 * k * k * std::sqrt(d) * L0 / (C1 * C1) +
                    (2.0 - C1) * std::sqrt(d) * L0 / (C1 * C1) +
                    std::sqrt(d) * L0 * (k * k + 1.0) / (C1 * C1);
  const double C4 = a4 * omb1 * omb1 * d * L1 * (k + k * k) / (2.0 * C1 * C1 * C2 * C2) +
                    std::sqrt(d) * L1 * (2.0 + 2.0 * (2.0 - C1) * (2.0 - C1)) / (C1 * C1) *
                        a4 * omb1 * omb1 / (2.0 * C2 * C2);
  const double C5 = std::min(ceiling(C1, 112.0 * C3 * omb1 * d * D1),
                             ceiling(q, 168.0 * D1 * C1 * C4 * omb1 * d));
  const double sv = std::sqrt(D0 + pc.v0_norm);
  const double C6 = std::min(
      {ceiling(C2 * rz, 21.0 * a0 * d * D0),
       ceiling(C2 * C2 * C2 * rz, 21.0 * a0 * a1 * D1 * D1 * L0 * L0 * omb1 * omb1 * d * d * C5 * C5),
       ceiling(C2, 21.0 * a3 * d * b1),
       ceiling(C1, 84.0 * C3 * C5 * d * omb1),
       ceiling(q * q, 84.0 * C1 * C4 * C5 * C5 * omb1 * d * sv),
       ceiling(C1 * C1, 784.0 * C3 * C3 * C5 * C5 * omb1 * omb1 * d * D1),
       ceiling(q * q * q * q, 7056.0 * C1 * C1 * C4 * C4 * C5 * C5 * C5 * C5 * d * D1)});
  const double lam4 = std::min(ceiling(C2 * C2, 21.0 * a0 * std::sqrt(d) * D1 * L1 * omb1),
                               ceiling(C1 * C2, std::sqrt(d) * L1 * k * omb1));
  const double lam5 = 126.0 * C3 * C5 * omb1 / C1 * (2.0 * d * sv - pc.v0_log_sum);
  const double lam6 = 252.0 * C5 * C5 * C1 * C4 * omb1 * d / (q * q) * sv;

  const double omb2 = 1.0 - beta2;
  const double omb2_target = std::min(ceiling(2.0 * C2, 7.0 * a0 * D1), C6 * eps * eps);
  const double eta_max = std::min(lam4 * std::sqrt(omb2), C5 * omb2);
  const double c = rz + d * sv;

  return {{"C1", C1},
          {"C2", C2},
          {"C3", C3},
          {"C4", C4},
          {"C5", C5},
          {"C6", C6},
          {"q", q},
          {"alpha0", a0},
          {"alpha1", a1},
          {"alpha3", a3},
          {"alpha4", a4},
          {"Lambda4", lam4},
          {"Lambda5", lam5},
          {"Lambda6", lam6},
          {"c", c},
          {"one_minus_beta2", omb2},
          {"one_minus_beta2_target", omb2_target},
          {"eta_ceiling", eta_max},
          {"predicted_bound",
           (2.0 * c + std::sqrt(2.0 * c) + 4.0 * std::sqrt(d * D1) / std::sqrt(C6)) * eps},
          {"eps_regime_limit", std::sqrt(2.0 * C2) / std::sqrt(7.0 * a0 * C6 * D1)}};
}

ScheduleResult adam_schedule(double eps, double beta1, const ProblemConstants& pc,
                             std::optional<double> eta_override) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
  pc.validate();

  // Start from the constants at beta2 -> 1.
  const double C2_0 = std::sqrt(1.0 - beta1 * beta1);
  const double a0_0 = 21.0 / (2.0 * C2_0);
  double beta2 = 1.0 - std::min(ceiling(2.0 * C2_0, 7.0 * a0_0 * pc.d1), eps * eps);
  if (!(beta2 > beta1 * beta1)) beta2 = 0.5 * (1.0 + beta1 * beta1);

  double damping = 1.0;
  double last_step = kInf;
  int iterations = 0;
  bool converged = false;
  for (; iterations < 100; ++iterations) {
    const auto k = adam_constants(eps, beta1, beta2, pc);
    const double target = 1.0 - k.at("one_minus_beta2_target");
    if (!std::isfinite(target) || !(target < 1.0) || !(target > 0.0)) {
      throw std::invalid_argument("no admissible beta2: the fixed point left (0, 1)");
    }
    const double step = target - beta2;
    if (std::abs(step) < 1e-14) {
      converged = true;
      ++iterations;
      break;
    }
    // Halve the damping whenever the update flips sign without shrinking.
    if (std::isfinite(last_step) && step * last_step < 0.0 && std::abs(step) >= std::abs(last_step)) {
      damping *= 0.5;
    }
    last_step = step;
    double next = beta2 + damping * step;
    if (!(next > beta1 * beta1)) next = 0.5 * (beta2 + beta1 * beta1);
    beta2 = std::min(next, std::nextafter(1.0, 0.0));
  }
  if (!converged) throw std::runtime_error("beta2 fixed point did not converge in 100 iterations");
  if (!(beta1 <= std::sqrt(beta2))) throw std::runtime_error("beta1 > sqrt(beta2) at the fixed point");

  ScheduleResult r;
  r.kind = ScheduleKind::Adam;
  r.eps = eps;
  r.beta1 = beta1;
  r.beta2 = beta2;
  r.fixed_point_iterations = iterations;
  r.constants = adam_constants(eps, beta1, beta2, pc);
  const auto& k = r.constants;

  r.eta_ceiling = k.at("eta_ceiling");
  if (!std::isfinite(r.eta_ceiling) || !(r.eta_ceiling > 0.0)) {
    throw std::invalid_argument("step-size ceiling is not finite and positive");
  }
  r.eta = r.eta_ceiling;
  if (eta_override) {
    if (!(*eta_override > 0.0) || *eta_override > r.eta_ceiling) {
      throw std::invalid_argument("eta override must lie in (0, admissible ceiling]");
    }
    r.eta = *eta_override;
  }

  const double d = static_cast<double>(pc.d);
  const double rz = std::sqrt(pc.zeta);
  const double C1 = k.at("C1"), C2 = k.at("C2"), a0 = k.at("alpha0");
  const double omb1 = 1.0 - beta1;
  const double delta = pc.f1 - pc.f_star + r.eta * a0 * d * pc.d0 * omb1 / (2.0 * C1 * C2 * rz) +
                       r.eta * a0 * pc.d1 * omb1 * pc.grad1_sq / (2.0 * C1 * C2 * rz);
  r.constants["Delta_prime"] = delta;
  r.constants["fixed_point_residual"] =
      std::abs(k.at("one_minus_beta2_target") - k.at("one_minus_beta2"));
  const double e2 = eps * eps;
  r.t_min_real = std::max({126.0 * C1 * delta / (r.eta * omb1 * e2), k.at("Lambda5") / e2,
                           k.at("Lambda6") / e2});
  r.t_min = round_up_steps(r.t_min_real);
  r.predicted_bound = k.at("predicted_bound");
  r.in_regime = eps <= k.at("eps_regime_limit");
  return r;
}

double target_bound(const ScheduleResult& result, ScheduleKind kind) {
  if (result.kind != kind) {
    throw std::invalid_argument("schedule is " + to_string(result.kind) + ", not " +
                                to_string(kind));
  }
  return result.predicted_bound;
}

void write_schedule_report(std::ostream& os, const ScheduleResult& r) {
  os << "schedule = " << to_string(r.kind) << '\n'
     << "eps = " << csv_cell(r.eps) << '\n'
     << "beta1 = " << csv_cell(r.beta1) << '\n'
     << "beta2 = " << csv_cell(r.beta2) << '\n'
     << "eta = " << csv_cell(r.eta) << '\n'
     << "eta_ceiling = " << csv_cell(r.eta_ceiling) << '\n'
     << "t_min = " << r.t_min << '\n'
     << "predicted_bound = " << csv_cell(r.predicted_bound) << '\n'
     << "in_regime = " << (r.in_regime ? "true" : "false") << '\n';
  if (r.kind == ScheduleKind::Adam) {
    os << "fixed_point_iterations = " << r.fixed_point_iterations << '\n';
  }
  for (const auto& [name, value] : r.constants) os << name << " = " << csv_cell(value) << '\n';
}

}  // namespace cwadam
