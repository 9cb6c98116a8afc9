#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cwadam/optim.hpp"

using namespace cwadam;

namespace {

OptimizerConfig cfg(double eta, double b1, double b2, double zeta) {
  OptimizerConfig c;
  c.eta = eta;
  c.beta1 = b1;
  c.beta2 = b2;
  c.zeta = zeta;
  return c;
}

OptimizerState zero_state(std::size_t d) {
  OptimizerState s;
  s.x.assign(d, 0.0);
  s.m.assign(d, 0.0);
  s.v.assign(d, 0.0);
  return s;
}

}  // namespace

TEST(InitState, CopiesInputs) {
  const auto s = init_state(cfg(0.1, 0.9, 0.999, 1e-8), Vec{1, 2}, Vec{1e-8, 1e-8});
  EXPECT_EQ(s.x, (Vec{1, 2}));
  EXPECT_EQ(s.m, (Vec{0, 0}));
  EXPECT_EQ(s.v, (Vec{1e-8, 1e-8}));
  EXPECT_EQ(s.t, 0);
}

TEST(InitState, DefaultsV0ToZeta) {
  const auto s = init_state(cfg(0.1, 0.9, 0.999, 0.25), Vec{1, 2, 3});
  EXPECT_EQ(s.v, (Vec{0.25, 0.25, 0.25}));
}

TEST(InitState, RejectsBadInputs) {
  const auto c = cfg(0.1, 0.9, 0.999, 1e-8);
  EXPECT_THROW(init_state(c, Vec{1, 2}, Vec{1e-8, 0.0}), std::invalid_argument);
  EXPECT_THROW(init_state(c, Vec{std::nan("")}, Vec{1.0}), std::invalid_argument);
  EXPECT_THROW(init_state(c, Vec{1, 2}, Vec{1.0}), std::invalid_argument);
}

TEST(Config, RejectsOutOfRange) {
  EXPECT_THROW(cfg(0.0, 0.9, 0.999, 1e-8).validate(), std::invalid_argument);
  EXPECT_THROW(cfg(0.1, 1.0, 0.999, 1e-8).validate(), std::invalid_argument);
  EXPECT_THROW(cfg(0.1, 0.9, 1.0, 1e-8).validate(), std::invalid_argument);
  EXPECT_THROW(cfg(0.1, 0.9, 0.999, -1.0).validate(), std::invalid_argument);
}

TEST(AdamStep, HandExample) {
  const auto c = cfg(0.1, 0.5, 0.9, 1.0);
  auto s = zero_state(1);
  adam_step(s, c, Vec{3.0});
  EXPECT_DOUBLE_EQ(s.m[0], 1.5);
  EXPECT_DOUBLE_EQ(s.v[0], 0.9);
  EXPECT_NEAR(s.x[0], -0.15 / std::sqrt(1.9), 1e-15);
  EXPECT_NEAR(s.x[0], -0.108823, 5e-6);
  EXPECT_EQ(s.t, 1);
}

TEST(AdamStep, ZeroGradientDecaysV) {
  const auto c = cfg(0.1, 0.5, 0.9, 1.0);
  auto s = init_state(c, Vec{0.7, -1.2}, Vec{2.0, 4.0});
  adam_step(s, c, Vec{0.0, 0.0});
  EXPECT_EQ(s.x, (Vec{0.7, -1.2}));
  EXPECT_DOUBLE_EQ(s.v[0], 1.8);
  EXPECT_DOUBLE_EQ(s.v[1], 3.6);
}

TEST(AdamStep, Beta1ZeroMatchesRmsprop) {
  const auto c = cfg(0.05, 0.0, 0.95, 1e-3);
  auto a = init_state(c, Vec{0.3, -0.4, 2.0});
  auto b = a;
  const Vec gs[] = {{1.0, -2.0, 0.5}, {0.1, 3.0, -7.0}, {0.0, 0.0, 1e-9}};
  for (const auto& g : gs) {
    const auto ra = adam_step(a, c, g);
    const auto rb = rmsprop_step(b, cfg(0.05, 0.7, 0.95, 1e-3), g);
    EXPECT_EQ(ra.momentum_ratio_max, rb.momentum_ratio_max);
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.v, b.v);
}

TEST(AdamStep, OriginalVariant) {
  auto c = cfg(0.1, 0.5, 0.9, 1.0);
  c.variant = Variant::Original;
  c.lambda = 0.5;
  auto s = zero_state(1);
  adam_step(s, c, Vec{3.0});
  EXPECT_NEAR(s.x[0], -0.15 / (std::sqrt(0.9) + 0.5), 1e-15);
}

TEST(AdamStep, ReportsRatios) {
  const auto c = cfg(0.1, 0.5, 0.9, 1.0);
  auto s = zero_state(1);
  const auto r = adam_step(s, c, Vec{3.0});
  EXPECT_NEAR(r.momentum_ratio_max, 1.5 / std::sqrt(1.9), 1e-15);
  EXPECT_NEAR(r.gradient_ratio_max, 3.0 / std::sqrt(1.9), 1e-15);
  EXPECT_NEAR(r.displacement_inf_norm, 0.15 / std::sqrt(1.9), 1e-15);
  EXPECT_TRUE(report_violations(r, c).empty());
}

TEST(AdamStep, StrictModeThrowsOnViolation) {
  auto c = cfg(0.1, 0.5, 0.9, 1e-12);
  c.check_invariants = true;
  auto s = zero_state(1);
  // v is forced below its recursion so the ratio bound cannot hold.
  s.v[0] = 0.0;
  s.m[0] = 100.0;
  EXPECT_THROW(adam_step(s, c, Vec{0.0}), InvariantViolation);
}

TEST(AdamStep, DimensionMismatch) {
  const auto c = cfg(0.1, 0.5, 0.9, 1.0);
  auto s = zero_state(2);
  EXPECT_THROW(adam_step(s, c, Vec{1.0}), std::invalid_argument);
}

TEST(RmspropStep, HandExample) {
  const auto c = cfg(0.1, 0.0, 0.9, 1.0);
  auto s = zero_state(1);
  rmsprop_step(s, c, Vec{3.0});
  EXPECT_DOUBLE_EQ(s.v[0], 0.9);
  EXPECT_NEAR(s.x[0], -0.3 / std::sqrt(1.9), 1e-15);
  EXPECT_NEAR(s.x[0], -0.217646, 5e-6);
}

TEST(RmspropStep, ZeroGradient) {
  const auto c = cfg(0.1, 0.0, 0.9, 1.0);
  auto s = init_state(c, Vec{5.0}, Vec{3.0});
  rmsprop_step(s, c, Vec{0.0});
  EXPECT_EQ(s.x[0], 5.0);
  EXPECT_DOUBLE_EQ(s.v[0], 2.7);
}

TEST(SurrogateDenominator, Examples) {
  auto s = zero_state(1);
  EXPECT_EQ(surrogate_denominator(s, cfg(0.1, 0.5, 0.9, 1.0))[0], 1.0);
  s.v[0] = 0.9;
  EXPECT_NEAR(surrogate_denominator(s, cfg(0.1, 0.5, 0.9, 1.0))[0], std::sqrt(1.81), 1e-15);
  EXPECT_NEAR(surrogate_denominator(s, cfg(0.1, 0.5, 0.9, 1.0))[0], 1.345362, 1e-6);
  auto s2 = zero_state(2);
  s2.v = {0.0, 4.0};
  const auto r = surrogate_denominator(s2, cfg(0.1, 0.5, 0.5, 2.0));
  EXPECT_NEAR(r[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r[1], 2.0, 1e-15);
}

TEST(MomentumRatioBound, Examples) {
  EXPECT_NEAR(momentum_ratio_bound(cfg(0.1, 0.5, 0.9, 1.0)),
              0.5 / (std::sqrt(0.1) * std::sqrt(1.0 - 0.25 / 0.9)), 1e-14);
  EXPECT_NEAR(momentum_ratio_bound(cfg(0.1, 0.5, 0.9, 1.0)), 1.860522, 1e-6);
  EXPECT_NEAR(momentum_ratio_bound(cfg(0.1, 0.0, 0.99, 1.0)), 1.0 / std::sqrt(0.01), 1e-12);
  EXPECT_THROW(momentum_ratio_bound(cfg(0.1, 0.95, 0.9, 1.0)), std::invalid_argument);
}

TEST(WithinBound, Tolerance) {
  EXPECT_TRUE(within_bound(1.0, 1.0));
  EXPECT_TRUE(within_bound(1.0 + 1e-13, 1.0));
  EXPECT_FALSE(within_bound(1.0 + 1e-10, 1.0));
}

TEST(Variant, RoundTrip) {
  EXPECT_EQ(variant_from_string(to_string(Variant::Modified)), Variant::Modified);
  EXPECT_EQ(variant_from_string(to_string(Variant::Original)), Variant::Original);
  EXPECT_THROW(variant_from_string("sgd"), std::invalid_argument);
}
