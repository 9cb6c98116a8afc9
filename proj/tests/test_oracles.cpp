#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cwadam/oracles.hpp"

using namespace cwadam;

namespace {

double mc_mean(const Objective& o, const Vec& x, std::size_t i, int n, bool square,
               std::uint64_t seed, double* se) {
  Engine rng = make_stream(seed, 0);
  Vec g(o.dim());
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    o.sample(x, rng, g);
    const double y = square ? g[i] * g[i] : g[i];
    s += y;
    s2 += y * y;
  }
  const double mean = s / n;
  *se = std::sqrt((s2 / n - mean * mean) / n);
  return mean;
}

// Central differences as an independent gradient oracle.
Vec fd_grad(const Objective& o, Vec x) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = o.value(x);
    x[i] = xi - h;
    const double fm = o.value(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(GaussianLinreg, Moments) {
  const auto o = make_objective(ObjectiveSpec("gaussian_linreg"));
  const auto e = o->eval(Vec{2.0});
  EXPECT_DOUBLE_EQ(e.f, 4.0);
  EXPECT_DOUBLE_EQ(e.grad[0], 4.0);
  double se = 0.0;
  const double m1 = mc_mean(*o, {2.0}, 0, 200000, false, 3, &se);
  EXPECT_NEAR(m1, 4.0, 5 * se);
  const double m2 = mc_mean(*o, {2.0}, 0, 200000, true, 4, &se);
  EXPECT_NEAR(m2, 48.0, 5 * se);
  EXPECT_EQ(o->noise().d0, 0.0);
  EXPECT_EQ(o->noise().d1, 3.0);
}

TEST(Quartic, ZeroGradientPointIsolatesD0) {
  const auto o = make_objective(ObjectiveSpec("quartic").set("dim", 3).set("sigma0", 1.0));
  const auto e = o->eval(Vec(3, 0.0));
  EXPECT_EQ(e.f, 0.0);
  for (double g : e.grad) EXPECT_EQ(g, 0.0);
  double se = 0.0;
  const double m2 = mc_mean(*o, Vec(3, 0.0), 1, 200000, true, 5, &se);
  EXPECT_NEAR(m2, 1.0, 5 * se);
  EXPECT_EQ(o->noise().d0, 1.0);
}

TEST(Quartic, AffineNoiseAtNonzeroGradient) {
  const auto o = make_objective(
      ObjectiveSpec("quartic").set("dim", 2).set("sigma0", 0.5).set("sigma1", 0.7));
  const Vec x{1.1, -0.4};
  double se = 0.0;
  const double df = 1.1 * 1.1 * 1.1;
  const double m2 = mc_mean(*o, x, 0, 200000, true, 6, &se);
  EXPECT_NEAR(m2, 0.25 + (1 + 0.49) * df * df, 5 * se);
  EXPECT_NEAR(o->noise().d1, 1.49, 1e-15);
}

TEST(Quadratic, NoiselessSample) {
  const auto o = make_objective(ObjectiveSpec("quadratic").set("a", {1.0}));
  const auto e = o->eval(Vec{3.0});
  EXPECT_DOUBLE_EQ(e.f, 4.5);
  EXPECT_DOUBLE_EQ(e.grad[0], 3.0);
  Engine rng = make_stream(1, 0);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(o->sample(Vec{3.0}, rng)[0], 3.0);
}

TEST(NoiseEnvelope, Examples) {
  const auto lin = make_objective(ObjectiveSpec("gaussian_linreg"));
  EXPECT_DOUBLE_EQ(noise_envelope(*lin, Vec{2.0})[0], 48.0);
  const auto q = make_objective(ObjectiveSpec("quartic").set("dim", 1).set("sigma0", 1.0));
  EXPECT_DOUBLE_EQ(noise_envelope(*q, Vec{1.0})[0], 2.0);
  const auto q3 = make_objective(ObjectiveSpec("quartic").set("dim", 3).set("sigma0", 0.3));
  for (double v : noise_envelope(*q3, Vec(3, 0.0))) EXPECT_DOUBLE_EQ(v, 0.09);
}

TEST(Oracles, GradientsMatchFiniteDifferences) {
  const ObjectiveSpec specs[] = {
      ObjectiveSpec("quartic").set("dim", 4),
      ObjectiveSpec("exp_sum").set("dim", 3),
      ObjectiveSpec("quadratic").set("a", {1.0, 0.5, 3.0}),
      ObjectiveSpec("gaussian_linreg"),
      ObjectiveSpec("logistic_toy").set("n", 64).set("features", 3),
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& s : specs) {
    const auto o = make_objective(s);
    for (int k = 0; k < 5; ++k) {
      Vec x(o->dim());
      for (double& xi : x) xi = u(rng);
      const Vec g = o->grad(x);
      const Vec fd = fd_grad(*o, x);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(g[i], fd[i], 1e-6 * std::max(1.0, std::abs(g[i]))) << s.name;
      }
    }
  }
}

// |df_i(x) - df_i(y)| <= (L0/sqrt(d) + L1 |df_i(x)|) ||x - y|| whenever
// ||x - y|| <= 1/L1, checked on random pairs inside the box.
TEST(Oracles, SmoothnessConstantsHoldInBox) {
  const ObjectiveSpec specs[] = {
      ObjectiveSpec("quartic").set("dim", 3).set("box", 0.8),
      ObjectiveSpec("exp_sum").set("dim", 2).set("box", 1.5),
      ObjectiveSpec("quadratic").set("a", {2.0, 0.1}),
      ObjectiveSpec("logistic_toy").set("n", 64).set("features", 3),
  };
  std::mt19937_64 rng(12);
  for (const auto& s : specs) {
    const auto o = make_objective(s);
    const double B = std::isfinite(o->box()) ? o->box() : 2.0;
    std::uniform_real_distribution<double> u(-B, B);
    const double L0 = o->smooth().l0, L1 = o->smooth().l1;
    const double sd = std::sqrt(static_cast<double>(o->dim()));
    for (int k = 0; k < 2000; ++k) {
      Vec x(o->dim()), y(o->dim());
      for (double& xi : x) xi = u(rng);
      for (double& yi : y) yi = u(rng);
      double dist = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dist += (x[i] - y[i]) * (x[i] - y[i]);
      dist = std::sqrt(dist);
      if (L1 > 0.0 && dist > 1.0 / L1) continue;
      const Vec gx = o->grad(x), gy = o->grad(y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_LE(std::abs(gx[i] - gy[i]), (L0 / sd + L1 * std::abs(gx[i])) * dist * (1 + 1e-12))
            << s.name;
      }
    }
  }
}

TEST(LogisticToy, FullBatchIsDeterministic) {
  const auto o = make_objective(ObjectiveSpec("logistic_toy").set("n", 32).set("batch", 32));
  const Vec x(o->dim(), 0.2);
  Engine rng = make_stream(1, 0);
  const Vec g = o->sample(x, rng);
  const Vec full = o->grad(x);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], full[i], 1e-15);
}

TEST(LogisticToy, MinibatchIsUnbiased) {
  const auto o = make_objective(ObjectiveSpec("logistic_toy").set("n", 64).set("batch", 4));
  const Vec x(o->dim(), 0.1);
  const Vec full = o->grad(x);
  double se = 0.0;
  const double m = mc_mean(*o, x, 0, 100000, false, 9, &se);
  EXPECT_NEAR(m, full[0], 5 * se);
}

TEST(MakeObjective, RejectsBadSpecs) {
  EXPECT_THROW(make_objective(ObjectiveSpec("rosenbrock")), std::invalid_argument);
  EXPECT_THROW(make_objective(ObjectiveSpec("quartic").set("dims", 3)), std::invalid_argument);
  EXPECT_THROW(make_objective(ObjectiveSpec("quartic").set("sigma0", -1.0)), std::invalid_argument);
  EXPECT_THROW(make_objective(ObjectiveSpec("quartic").set("dim", std::nan(""))),
               std::invalid_argument);
  EXPECT_THROW(make_objective(ObjectiveSpec("quadratic").set("a", {1.0, -2.0})),
               std::invalid_argument);
}

TEST(MakeObjective, DimensionChecked) {
  const auto o = make_objective(ObjectiveSpec("quartic").set("dim", 2));
  EXPECT_THROW(o->value(Vec{1.0}), std::invalid_argument);
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
  Engine a = make_stream(1, 0), b = make_stream(1, 0), c = make_stream(1, 1), d = make_stream(2, 0);
  const auto xa = a(), xb = b(), xc = c(), xd = d();
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, xc);
  EXPECT_NE(xa, xd);
}
