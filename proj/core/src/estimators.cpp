#include "cwadam/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cwadam/io.hpp"

namespace cwadam {

std::optional<Vec> estimate_coordinate_smoothness(const Objective& oracle,
                                                  std::span<const double> x_t,
                                                  std::span<const double> x_next,
                                                  std::span<const double> gammas) {
  const std::size_t d = oracle.dim();
  if (x_t.size() != d || x_next.size() != d) {
    throw std::invalid_argument("probe points do not match the oracle dimension");
  }
  for (double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("every gamma must lie in (0, 1]");
  }
  Vec dx(d);
  for (std::size_t i = 0; i < d; ++i) dx[i] = x_next[i] - x_t[i];
  const double len = l2_norm(dx);

  const Vec g0 = oracle.grad(x_t);
  Vec out(d, 0.0);
  Vec probe(d), gp(d);
  bool any = false;
  for (double gamma : gammas) {
    if (gamma * len < kMinProbeLength) continue;
    any = true;
    for (std::size_t i = 0; i < d; ++i) probe[i] = x_t[i] + gamma * dx[i];
    oracle.gradient(probe, gp);
    for (std::size_t i = 0; i < d; ++i) {
      out[i] = std::max(out[i], std::abs(gp[i] - g0[i]) / (gamma * len));
    }
  }
  if (!any) return std::nullopt;
  return out;
}

std::vector<SmoothnessSample> smoothness_samples(const TrajectoryRecord& record,
                                                 const Objective& oracle,
                                                 std::span<const double> gammas,
                                                 std::int64_t* skipped) {
  if (!record.has_full_log()) {
    throw std::invalid_argument("smoothness samples need a fully logged trajectory");
  }
  std::vector<SmoothnessSample> out;
  std::int64_t dropped = 0;
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const Vec& xt = record.steps[k].x;
    const Vec& xn = k + 1 < record.steps.size() ? record.steps[k + 1].x : record.x_final;
    const auto local = estimate_coordinate_smoothness(oracle, xt, xn, gammas);
    if (!local) {
      ++dropped;
      continue;
    }
    const Vec grad = oracle.grad(xt);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      out.push_back({record.steps[k].t, i, std::abs(grad[i]), (*local)[i]});
    }
  }
  if (skipped) *skipped = dropped;
  return out;
}

namespace {

struct Moments {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
};

double weighted_sse(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, double a, double b) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - a - b * x[k];
    s += (w.empty() ? 1.0 : w[k]) * r * r;
  }
  return s;
}

double pinball(std::span<const double> x, std::span<const double> y, double a, double b,
               double tau) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double u = y[k] - a - b * x[k];
    s += u >= 0.0 ? tau * u : (tau - 1.0) * u;
  }
  return s / static_cast<double>(x.size());
}

bool degenerate_x(const Moments& m) {
  if (m.sw <= 0.0 || m.sxx <= 0.0) return true;
  const double mean = m.sx / m.sw;
  const double var = m.sxx / m.sw - mean * mean;
  return var <= 1e-12 * (m.sxx / m.sw);
}

}  // namespace

LineFit fit_nonnegative_line(std::span<const double> x, std::span<const double> y,
                             std::span<const double> w) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) {
    throw std::invalid_argument("fit inputs differ in length");
  }
  if (x.empty()) throw std::invalid_argument("fit needs at least one sample");
  Moments m;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double wk = w.empty() ? 1.0 : w[k];
    m.sw += wk;
    m.sx += wk * x[k];
    m.sy += wk * y[k];
    m.sxx += wk * x[k] * x[k];
    m.sxy += wk * x[k] * y[k];
  }
  LineFit best;
  best.n = x.size();
  best.rank_deficient = degenerate_x(m);

  std::vector<std::pair<double, double>> candidates = {{0.0, 0.0}, {m.sy / m.sw, 0.0}};
  if (!best.rank_deficient) {
    const double det = m.sw * m.sxx - m.sx * m.sx;
    const double b = (m.sw * m.sxy - m.sx * m.sy) / det;
    candidates.emplace_back((m.sy - b * m.sx) / m.sw, b);
    candidates.emplace_back(0.0, m.sxy / m.sxx);
  }
  double best_sse = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : candidates) {
    if (!(a >= 0.0) || !(b >= 0.0)) continue;
    const double sse = weighted_sse(x, y, w, a, b);
    if (sse < best_sse) {
      best_sse = sse;
      best.intercept = a;
      best.slope = b;
    }
  }
  best.residual = std::sqrt(best_sse / m.sw);
  return best;
}

LineFit fit_quantile_line(std::span<const double> x, std::span<const double> y, double tau) {
  if (x.size() != y.size()) throw std::invalid_argument("fit inputs differ in length");
  if (x.empty()) throw std::invalid_argument("fit needs at least one sample");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");

  const std::size_t n = x.size();
  const std::size_t rank =
      std::min(n - 1, static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n))) - 1);
  std::vector<double> r(n);
  auto intercept_for = [&](double b) {
    for (std::size_t k = 0; k < n; ++k) r[k] = y[k] - b * x[k];
    std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(rank), r.end());
    return std::max(0.0, r[rank]);
  };
  auto loss = [&](double b) { return pinball(x, y, intercept_for(b), b, tau); };

  Moments m;
  for (std::size_t k = 0; k < n; ++k) {
    m.sw += 1.0;
    m.sx += x[k];
    m.sxx += x[k] * x[k];
  }
  LineFit fit;
  fit.n = n;
  fit.rank_deficient = degenerate_x(m);

  double hi = 0.0;
  if (!fit.rank_deficient) {
    // Beyond max y/x every residual only falls as the slope grows.
    for (std::size_t k = 0; k < n; ++k) {
      if (x[k] > 0.0) hi = std::max(hi, y[k] / x[k]);
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (loss(m1) <= loss(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  fit.slope = 0.5 * (lo + hi);
  fit.intercept = intercept_for(fit.slope);
  fit.residual = pinball(x, y, fit.intercept, fit.slope, tau);
  return fit;
}

std::vector<SmoothnessFit> fit_l0_l1(const std::vector<SmoothnessSample>& samples, std::size_t d,
                                     double quantile) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const double root_d = std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> xs(d + 1), ys(d + 1);
  for (const auto& s : samples) {
    if (s.i >= d) throw std::out_of_range("sample coordinate out of range");
    xs[s.i].push_back(s.grad_abs);
    ys[s.i].push_back(s.local_l);
    xs[d].push_back(s.grad_abs);
    ys[d].push_back(s.local_l);
  }
  std::vector<SmoothnessFit> out;
  for (std::size_t c = 0; c <= d; ++c) {
    if (xs[c].size() < kMinFitSamples) {
      throw std::invalid_argument("coordinate " + std::to_string(c) + " has " +
                                  std::to_string(xs[c].size()) + " samples; need at least 10");
    }
    SmoothnessFit f;
    f.coordinate = c;
    f.least_squares = fit_nonnegative_line(xs[c], ys[c]);
    f.envelope = fit_quantile_line(xs[c], ys[c], quantile);
    f.l0_hat = f.least_squares.intercept * root_d;
    f.l1_hat = f.least_squares.slope;
    f.l0_envelope = f.envelope.intercept * root_d;
    f.l1_envelope = f.envelope.slope;
    out.push_back(f);
  }
  return out;
}

namespace {

AffineFit affine_fit(std::size_t coordinate, const std::vector<const NoisePoint*>& pts) {
  std::vector<double> x, y, w;
  for (const NoisePoint* p : pts) {
    x.push_back(p->grad_abs * p->grad_abs);
    y.push_back(p->mean_sq);
    const double floor = 1e-12 * std::max(1.0, std::abs(p->mean_sq));
    const double se = std::max(p->mean_sq_se, floor);
    w.push_back(1.0 / (se * se));
  }
  const LineFit line = fit_nonnegative_line(x, y, w);
  AffineFit f;
  f.coordinate = coordinate;
  f.d0_hat = line.intercept;
  f.d1_hat = line.slope;
  f.n_points = static_cast<std::int64_t>(pts.size());
  f.rank_deficient = line.rank_deficient;
  const double dof = std::max<double>(1.0, static_cast<double>(pts.size()) - 2.0);
  f.residual = weighted_sse(x, y, w, line.intercept, line.slope) / dof;
  return f;
}

}  // namespace

NoiseEstimate estimate_affine_noise(const Objective& oracle, const std::vector<Vec>& points,
                                    std::int64_t n_samples, Engine& rng,
                                    bool common_random_numbers) {
  if (n_samples < 100) throw std::invalid_argument("noise estimation needs n_samples >= 100");
  if (points.empty()) throw std::invalid_argument("noise estimation needs at least one point");
  const std::size_t d = oracle.dim();
  const double n = static_cast<double>(n_samples);

  NoiseEstimate est;
  const Engine start = rng;
  Vec g(d), s1(d), s2(d), s4(d);
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (points[p].size() != d) throw std::invalid_argument("noise point has the wrong dimension");
    if (common_random_numbers) rng = start;
    const Vec grad = oracle.grad(points[p]);
    std::fill(s1.begin(), s1.end(), 0.0);
    std::fill(s2.begin(), s2.end(), 0.0);
    std::fill(s4.begin(), s4.end(), 0.0);
    for (std::int64_t k = 0; k < n_samples; ++k) {
      oracle.sample(points[p], rng, g);
      for (std::size_t i = 0; i < d; ++i) {
        const double sq = g[i] * g[i];
        s1[i] += g[i];
        s2[i] += sq;
        s4[i] += sq * sq;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      NoisePoint np;
      np.point = p;
      np.i = i;
      np.grad_abs = std::abs(grad[i]);
      np.mean_sq = s2[i] / n;
      const double var_sq = std::max(0.0, (s4[i] / n - np.mean_sq * np.mean_sq) * n / (n - 1.0));
      np.mean_sq_se = std::sqrt(var_sq / n);
      const double mean = s1[i] / n;
      np.std_g = std::sqrt(std::max(0.0, (np.mean_sq - mean * mean) * n / (n - 1.0)));
      est.points.push_back(np);
    }
  }

  std::vector<std::vector<const NoisePoint*>> by_coord(d + 1);
  for (const auto& np : est.points) {
    by_coord[np.i].push_back(&np);
    by_coord[d].push_back(&np);
  }
  for (std::size_t c = 0; c <= d; ++c) est.fits.push_back(affine_fit(c, by_coord[c]));
  return est;
}

void write_smoothness_csv(std::ostream& os, const std::vector<SmoothnessSample>& samples) {
  csv_row(os, "t", "coordinate", "grad_abs", "local_l");
  for (const auto& s : samples) {
    csv_row(os, s.t, static_cast<std::uint64_t>(s.i), s.grad_abs, s.local_l);
  }
}

void write_smoothness_fit_csv(std::ostream& os, const std::vector<SmoothnessFit>& fits) {
  csv_row(os, "coordinate", "pooled", "n", "l0_hat", "l1_hat", "ls_residual", "l0_envelope",
          "l1_envelope", "envelope_loss", "rank_deficient");
  const std::size_t pooled = fits.empty() ? 0 : fits.back().coordinate;
  for (const auto& f : fits) {
    csv_row(os, static_cast<std::uint64_t>(f.coordinate), f.coordinate == pooled,
            static_cast<std::uint64_t>(f.least_squares.n), f.l0_hat, f.l1_hat,
            f.least_squares.residual, f.l0_envelope, f.l1_envelope, f.envelope.residual,
            f.least_squares.rank_deficient);
  }
}

void write_noise_points_csv(std::ostream& os, const std::vector<NoisePoint>& points) {
  csv_row(os, "point", "coordinate", "grad_abs", "mean_sq", "mean_sq_se", "std_g");
  for (const auto& p : points) {
    csv_row(os, static_cast<std::uint64_t>(p.point), static_cast<std::uint64_t>(p.i), p.grad_abs,
            p.mean_sq, p.mean_sq_se, p.std_g);
  }
}

void write_affine_fit_csv(std::ostream& os, const std::vector<AffineFit>& fits) {
  csv_row(os, "coordinate", "pooled", "n_points", "d0_hat", "d1_hat", "residual",
          "rank_deficient");
  const std::size_t pooled = fits.empty() ? 0 : fits.back().coordinate;
  for (const auto& f : fits) {
    csv_row(os, static_cast<std::uint64_t>(f.coordinate), f.coordinate == pooled, f.n_points,
            f.d0_hat, f.d1_hat, f.residual, f.rank_deficient);
  }
}

}  // namespace cwadam
