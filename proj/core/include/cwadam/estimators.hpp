#pragma once

// Empirical recovery of the smoothness constants (L0, L1) and the affine
// noise constants (D0, D1) from oracle probes and trajectories.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "cwadam/oracles.hpp"
#include "cwadam/trajectory.hpp"

namespace cwadam {

inline const std::vector<double> kDefaultGammas = {0.125, 0.25, 0.5, 1.0};
inline constexpr double kMinProbeLength = 1e-12;
inline constexpr std::size_t kMinFitSamples = 10;

struct SmoothnessSample {
  std::int64_t t = 0;
  std::size_t i = 0;
  double grad_abs = 0.0;
  double local_l = 0.0;
};

// local_l_i = max over gamma of |df_i(x + gamma dx) - df_i(x)| / (gamma ||dx||),
// dx = x_next - x_t. Probes with gamma ||dx|| < 1e-12 are skipped; nullopt
// when every probe is skipped.
std::optional<Vec> estimate_coordinate_smoothness(const Objective& oracle,
                                                  std::span<const double> x_t,
                                                  std::span<const double> x_next,
                                                  std::span<const double> gammas = kDefaultGammas);

// One sample per (step, coordinate) of a fully logged trajectory. `skipped`
// receives the number of degenerate steps.
std::vector<SmoothnessSample> smoothness_samples(const TrajectoryRecord& record,
                                                 const Objective& oracle,
                                                 std::span<const double> gammas = kDefaultGammas,
                                                 std::int64_t* skipped = nullptr);

// y ~ intercept + slope * x with intercept, slope >= 0.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;  // root mean square (least squares) or mean pinball loss (envelope)
  std::size_t n = 0;
  bool rank_deficient = false;
};

// Nonnegative (weighted) least squares. Empty weights mean unit weights.
LineFit fit_nonnegative_line(std::span<const double> x, std::span<const double> y,
                             std::span<const double> w = {});

// Upper-envelope fit by quantile regression at level tau.
LineFit fit_quantile_line(std::span<const double> x, std::span<const double> y, double tau);

struct SmoothnessFit {
  std::size_t coordinate = 0;  // d for the pooled fit
  double l0_hat = 0.0;         // intercept * sqrt(d)
  double l1_hat = 0.0;
  LineFit least_squares;
  double l0_envelope = 0.0;
  double l1_envelope = 0.0;
  LineFit envelope;
};

// Per coordinate, followed by one pooled fit over all coordinates. Throws
// when a coordinate has fewer than 10 samples.
std::vector<SmoothnessFit> fit_l0_l1(const std::vector<SmoothnessSample>& samples, std::size_t d,
                                     double quantile = 0.95);

struct NoisePoint {
  std::size_t point = 0;
  std::size_t i = 0;
  double grad_abs = 0.0;
  double mean_sq = 0.0;     // sample mean of g_i^2
  double mean_sq_se = 0.0;  // its standard error
  double std_g = 0.0;       // sample standard deviation of g_i
};

struct AffineFit {
  std::size_t coordinate = 0;  // d for the pooled fit
  double d0_hat = 0.0;
  double d1_hat = 0.0;
  double residual = 0.0;  // weighted sum of squares per degree of freedom
  std::int64_t n_points = 0;
  bool rank_deficient = false;
};

struct NoiseEstimate {
  std::vector<NoisePoint> points;
  std::vector<AffineFit> fits;  // per coordinate, then pooled
};

// Every point reuses the same random stream (common random numbers), so the
// regression sees correlated rather than independent sampling errors.
// Weighted by inverse squared standard errors. n_samples >= 100.
NoiseEstimate estimate_affine_noise(const Objective& oracle, const std::vector<Vec>& points,
                                    std::int64_t n_samples, Engine& rng,
                                    bool common_random_numbers = true);

void write_smoothness_csv(std::ostream& os, const std::vector<SmoothnessSample>& samples);
void write_smoothness_fit_csv(std::ostream& os, const std::vector<SmoothnessFit>& fits);
void write_noise_points_csv(std::ostream& os, const std::vector<NoisePoint>& points);
void write_affine_fit_csv(std::ostream& os, const std::vector<AffineFit>& fits);

}  // namespace cwadam
