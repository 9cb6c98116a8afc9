#pragma once

// Executable forms of the deterministic inequalities behind the convergence
// analysis: scalar-sequence lemmas, telescoping sums, the descent inequality
// residual, the surrogate split of the first-order term and the momentum
// potential u_t.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cwadam/optim.hpp"
#include "cwadam/oracles.hpp"
#include "cwadam/trajectory.hpp"

namespace cwadam {

// a_t = beta2 a_{t-1} + (1 - beta2) c_t^2,  b_t = beta1 b_{t-1} + (1 - beta1) c_t.
struct SequenceCase {
  Vec c;  // c_1..c_T
  double beta1 = 0.0;
  double beta2 = 0.5;
  double a0 = 1.0;
  double b0 = 0.0;
  double zeta = 0.0;

  void validate() const;
};

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool holds = false;
};

BoundCheck make_check(double lhs, double rhs);

// max_t b_t / sqrt(a_t + zeta) against (1-b1)/(sqrt(1-b2) sqrt(1-b1^2/b2)).
BoundCheck check_momentum_ratio(const SequenceCase& c);

// sum b_t^2 / a_t against (1-b1)^2/((1-b1/sqrt b2)^2 (1-b2)) (ln(a_T/a_0) - T ln b2).
BoundCheck check_sum_ratio_log(const SequenceCase& c);

// sum b_t^2 / sqrt(a_t) against
// (1-b1)^2/(1-b1/b2^(1/4))^2 (2/(1-b2) (sqrt a_T - sqrt a_0) + sum 2 sqrt a_{t-1}).
BoundCheck check_sum_ratio_sqrt(const SequenceCase& c);

// Test hook: replaces (1-beta2)^(1/2) by (1-beta2)^(-1/2) in the momentum
// bound, which makes it fail on ordinary inputs.
BoundCheck check_momentum_ratio_injected(const SequenceCase& c);

// Random cases with T in [1, max_T], c_t in [0, 10], a0 in (0, 1], b0 = 0.
// `fourth_root` draws beta1^4 < beta2 instead of beta1^2 < beta2.
SequenceCase random_sequence_case(Engine& rng, bool fourth_root, std::int64_t max_T = 512);

// sum_t (1/sqrt(beta2 v_{t-1,i} + zeta) - 1/sqrt(v_{t,i} + zeta)) against
// 1/sqrt(zeta) + T (1 - sqrt(beta2)) / sqrt(zeta). Needs a full log.
BoundCheck check_telescoping(const TrajectoryRecord& record, const OptimizerConfig& config,
                             std::size_t i);

double telescoping_rhs(const OptimizerConfig& config, std::int64_t T);

// r_t = f(x_t) - f(x_{t+1}) + sum_i (L0/(2 sqrt d) + L1 |df_i(x_t)|/2) ||dx|| |dx_i|
//       - <grad f(x_t), x_t - x_{t+1}>.  Needs a full log.
std::vector<double> descent_residual(const TrajectoryRecord& record, const Objective& oracle,
                                     const SmoothnessModel& smooth);

struct SurrogateSplit {
  double first_a = 0.0;
  double first_b = 0.0;
};

// Pathwise samples of the two first-order terms at step t (1-based).
SurrogateSplit surrogate_decomposition(const TrajectoryRecord& record, const Objective& oracle,
                                       std::int64_t t);

// Same split for a single fresh gradient sample g at a fixed state.
SurrogateSplit surrogate_split(std::span<const double> grad, std::span<const double> g,
                               std::span<const double> v_prev, const OptimizerConfig& config);

struct PotentialTerms {
  Vec main;           // -eta (1-b1) g_t / sqrt(b2 v_{t-1} + zeta) / C1
  Vec surrogate;      // eta m_t (1/sqrt(b2 v_{t-1} + zeta) - 1/sqrt(v_t + zeta)) / C1
  Vec zeta_mismatch;  // eta b1 m_{t-1} (1/sqrt(b2 v_{t-1} + b2 zeta) - 1/sqrt(b2 v_{t-1} + zeta)) / C1
};

// u_{t+1} - u_t minus the three terms, as a max-norm relative to the size of
// the potential iterates and terms involved.
struct PotentialStep {
  double residual_abs = 0.0;
  double residual_rel = 0.0;
};

// One step of the identity. x_prev = x_{t-1} (equal to x_t at t = 1).
PotentialStep potential_identity_step(std::span<const double> x_prev, std::span<const double> x_t,
                                      std::span<const double> x_next, std::span<const double> g_t,
                                      std::span<const double> m_prev, std::span<const double> m_t,
                                      std::span<const double> v_prev, std::span<const double> v_t,
                                      const OptimizerConfig& config);

PotentialTerms potential_terms(std::span<const double> g_t, std::span<const double> m_prev,
                               std::span<const double> m_t, std::span<const double> v_prev,
                               std::span<const double> v_t, const OptimizerConfig& config);

struct PotentialSequence {
  std::vector<Vec> u;             // u_1 .. u_{T+1}
  std::vector<double> residual;   // relative residual per step
  double max_residual = 0.0;
};

// Requires beta1 < sqrt(beta2) and a full log.
PotentialSequence potential_sequence(const TrajectoryRecord& record, const OptimizerConfig& config);

// Monte-Carlo estimate, at a fixed state, of first-order.b and of the negated
// bracket that bounds it from below (alpha0 = 1, alpha1 = 7 by default).
struct FirstOrderBDiagnostic {
  double first_b_mean = 0.0;
  double first_b_se = 0.0;
  double lower_bound = 0.0;
  double lower_bound_se = 0.0;
  double slack = 0.0;  // first_b_mean - lower_bound
  double slack_se = 0.0;
  std::int64_t samples = 0;
};

FirstOrderBDiagnostic first_order_b_diagnostic(const Objective& oracle,
                                               const OptimizerConfig& config,
                                               std::span<const double> x_prev,
                                               std::span<const double> x_t,
                                               std::span<const double> v_prev,
                                               std::int64_t n_samples, Engine& rng,
                                               double alpha0 = 1.0, double alpha1 = 7.0);

// Online accumulators used by run_trajectory.
class TelescopingTracker {
 public:
  TelescopingTracker(std::size_t d, const OptimizerConfig& config);
  void add(std::span<const double> v_prev, std::span<const double> v_t);
  const Vec& lhs() const { return lhs_; }
  std::int64_t steps() const { return steps_; }
  double rhs() const;
  std::int64_t violations() const;

 private:
  OptimizerConfig config_;
  Vec lhs_;
  std::int64_t steps_ = 0;
};

struct SequenceCaseRow {
  std::string lemma;
  std::int64_t index = 0;
  SequenceCase c;
  BoundCheck check;
};

void write_sequence_csv_header(std::ostream& os);
void write_sequence_csv_row(std::ostream& os, const SequenceCaseRow& row);

// Replay string: beta1, beta2, a0, b0, zeta and the c values.
std::string serialize_case(const SequenceCase& c);

}  // namespace cwadam
