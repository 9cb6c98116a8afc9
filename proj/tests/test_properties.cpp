// Randomized property suites. Every lemma lhs is recomputed here by a plain
// loop and compared with the library before the bound itself is checked.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cwadam/lemmas.hpp"

using namespace cwadam;

namespace {

constexpr int kCases = 10000;

struct Sequences {
  Vec a;  // a_0 .. a_T
  Vec b;  // b_0 .. b_T
};

Sequences recurse(const SequenceCase& c) {
  Sequences s{{c.a0}, {c.b0}};
  for (double ct : c.c) {
    s.a.push_back(c.beta2 * s.a.back() + (1 - c.beta2) * ct * ct);
    s.b.push_back(c.beta1 * s.b.back() + (1 - c.beta1) * ct);
  }
  return s;
}

bool close(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); }

}  // namespace

TEST(Property, MomentumRatio) {
  Engine rng = make_stream(101, 0);
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_sequence_case(rng, false);
    const auto s = recurse(c);
    double lhs = 0.0;
    for (std::size_t t = 1; t < s.a.size(); ++t) {
      lhs = std::max(lhs, std::abs(s.b[t]) / std::sqrt(s.a[t] + c.zeta));
    }
    const auto r = check_momentum_ratio(c);
    ASSERT_TRUE(close(r.lhs, lhs)) << serialize_case(c);
    ASSERT_TRUE(r.holds) << serialize_case(c);
    ASSERT_LE(r.lhs, r.rhs * (1 + 1e-12) + 1e-12);
  }
}

TEST(Property, SumRatioLog) {
  Engine rng = make_stream(102, 0);
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_sequence_case(rng, false);
    const auto s = recurse(c);
    double lhs = 0.0;
    for (std::size_t t = 1; t < s.a.size(); ++t) lhs += s.b[t] * s.b[t] / s.a[t];
    const auto r = check_sum_ratio_log(c);
    ASSERT_TRUE(close(r.lhs, lhs)) << serialize_case(c);
    ASSERT_TRUE(r.holds) << serialize_case(c);
  }
}

TEST(Property, SumRatioSqrt) {
  Engine rng = make_stream(103, 0);
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_sequence_case(rng, true);
    ASSERT_LT(std::pow(c.beta1, 4), c.beta2);
    const auto s = recurse(c);
    double lhs = 0.0;
    for (std::size_t t = 1; t < s.a.size(); ++t) lhs += s.b[t] * s.b[t] / std::sqrt(s.a[t]);
    const auto r = check_sum_ratio_sqrt(c);
    ASSERT_TRUE(close(r.lhs, lhs)) << serialize_case(c);
    ASSERT_TRUE(r.holds) << serialize_case(c);
  }
}

TEST(Property, CasesCoverTheDomain) {
  Engine rng = make_stream(104, 0);
  int beta1_zero = 0, zeta_zero = 0, long_runs = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto c = random_sequence_case(rng, false);
    ASSERT_GE(c.c.size(), 1u);
    ASSERT_LE(c.c.size(), 512u);
    ASSERT_GT(c.a0, 0.0);
    ASSERT_LE(c.a0, 1.0);
    ASSERT_LT(c.beta1 * c.beta1, c.beta2);
    for (double x : c.c) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 10.0);
    }
    beta1_zero += c.beta1 == 0.0;
    zeta_zero += c.zeta == 0.0;
    long_runs += c.c.size() > 256;
  }
  EXPECT_GT(beta1_zero, 50);
  EXPECT_GT(zeta_zero, 100);
  EXPECT_GT(long_runs, 500);
}

// The per-step report bounds hold for arbitrary gradient sequences.
TEST(Property, StepReportBounds) {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    OptimizerConfig c;
    c.beta2 = 1 - std::pow(10.0, -(0.05 + 4 * u(rng)));
    c.beta1 = u(rng) < 0.2 ? 0.0 : 0.999 * std::sqrt(c.beta2) * u(rng);
    c.zeta = std::pow(10.0, -12 * u(rng));
    c.eta = std::pow(10.0, -4 * u(rng));
    const std::size_t d = 1 + static_cast<std::size_t>(5 * u(rng));
    OptimizerState s = init_state(c, Vec(d, 0.0));
    Vec g(d);
    for (int t = 0; t < 40; ++t) {
      const double scale = std::pow(10.0, 6 * u(rng) - 3);
      for (double& gi : g) gi = u(rng) < 0.1 ? 0.0 : scale * n(rng);
      const Vec x_before = s.x;
      const auto r = adam_step(s, c, g);
      ASSERT_TRUE(report_violations(r, c).empty());
      for (std::size_t i = 0; i < d; ++i) {
        ASSERT_LE(std::abs(s.x[i] - x_before[i]),
                  c.eta * momentum_ratio_bound(c) * (1 + 1e-12) + 1e-12);
      }
    }
  }
}

TEST(Property, TelescopingOnRandomTrajectories) {
  const auto o = make_objective(
      ObjectiveSpec("quartic").set("dim", 3).set("sigma0", 1.0).set("sigma1", 1.0));
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    OptimizerConfig c;
    c.beta2 = 1 - std::pow(10.0, -(0.05 + 3 * u(rng)));
    c.beta1 = 0.99 * std::sqrt(c.beta2) * u(rng);
    c.zeta = std::pow(10.0, -8 * u(rng));
    c.eta = std::pow(10.0, -1 - 3 * u(rng));
    RunOptions opt;
    opt.log = LogMode::Full;
    opt.stream = static_cast<std::uint64_t>(k);
    const std::int64_t T = 1 + static_cast<std::int64_t>(200 * u(rng));
    const auto rec = run_trajectory(*o, c, Vec{0.5, -0.3, 0.1}, T, 9, opt);
    for (std::size_t i = 0; i < 3; ++i) ASSERT_TRUE(check_telescoping(rec, c, i).holds);
    ASSERT_EQ(rec.summary.report_violations, 0);
  }
}
