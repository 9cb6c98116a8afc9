#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "cwadam/estimators.hpp"
#include "cwadam/harness.hpp"
#include "cwadam/io.hpp"
#include "cwadam/lemmas.hpp"
#include "cwadam/schedule.hpp"
#include "cwadam/trajectory.hpp"

namespace cwadam::cli {

namespace {

struct Flags {
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out_dir;
  bool strict = false;
  std::int64_t cases = 10000;
  bool inject_bug = false;

  bool seed_set = false;
  bool out_set = false;
  bool cases_set = false;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string output_path(const ExperimentConfig& c, const std::string& file) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + c.output_dir + "'");
  return (std::filesystem::path(c.output_dir) / file).string();
}

template <typename Writer>
std::string write_file(const ExperimentConfig& c, const std::string& file, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  const std::string path = output_path(c, file);
  write_text_file(path, os.str());
  return path;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#d62728"};

std::string palette(std::size_t k) { return kPalette[k % std::size(kPalette)]; }

StudySettings study_settings(const ExperimentConfig& c, const Flags& f) {
  StudySettings s;
  s.optimizer = c.optimizer;
  s.beta1 = c.beta1;
  s.seeds = c.seeds;
  s.master_seed = c.seed;
  s.x1 = c.x1;
  s.v0 = c.v0;
  s.zeta = c.zeta;
  s.jobs = f.jobs;
  s.strict = c.strict;
  s.log = c.log;
  s.max_steps = c.max_steps;
  s.stop_at_threshold = c.stop_at_threshold;
  s.eta_override = c.eta;
  return s;
}

// ---- verify-lemmas ----

struct LemmaSuite {
  std::string name;
  bool fourth_root;
  std::function<BoundCheck(const SequenceCase&)> check;
};

int cmd_verify_lemmas(const ExperimentConfig& c, const Flags& f, std::ostream& out,
                      std::ostream& err) {
  const std::int64_t n = f.cases_set ? f.cases : c.n_samples;
  if (n < 1) {
    err << "error: --cases must be at least 1\n";
    return kConfigError;
  }
  std::vector<LemmaSuite> suites = {
      {"momentum_ratio", false,
       f.inject_bug ? check_momentum_ratio_injected : check_momentum_ratio},
      {"sum_ratio_log", false, check_sum_ratio_log},
      {"sum_ratio_sqrt", true, check_sum_ratio_sqrt},
  };

  std::ostringstream csv;
  write_sequence_csv_header(csv);
  int status = kOk;
  for (std::size_t s = 0; s < suites.size(); ++s) {
    Engine rng = make_stream(c.seed, s);
    std::int64_t failed = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 0; k < n; ++k) {
      const SequenceCase sc = random_sequence_case(rng, suites[s].fourth_root);
      const BoundCheck check = suites[s].check(sc);
      write_sequence_csv_row(csv, {suites[s].name, k, sc, check});
      min_slack = std::min(min_slack, check.slack);
      if (!check.holds) {
        if (failed == 0) {
          err << "violation: " << suites[s].name << " case " << k << " lhs=" << csv_cell(check.lhs)
              << " rhs=" << csv_cell(check.rhs) << "\n  replay: " << serialize_case(sc) << "\n";
        }
        ++failed;
        status = kViolation;
      }
    }
    out << suites[s].name << ": " << (n - failed) << "/" << n << " hold, min slack "
        << csv_cell(min_slack) << "\n";
  }

  // Telescoping on short synthetic trajectories of a noisy quadratic.
  const auto oracle =
      make_objective(ObjectiveSpec("quadratic").set("a", {1.0, 2.0, 3.0}).set("sigma0", 0.5).set(
          "sigma1", 0.5));
  const std::int64_t n_traj = std::max<std::int64_t>(1, n / 100);
  Engine rng = make_stream(c.seed, suites.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::int64_t checks = 0, failed = 0;
  for (std::int64_t k = 0; k < n_traj; ++k) {
    OptimizerConfig cfg;
    cfg.beta2 = 1.0 - std::pow(10.0, -(0.05 + 3.0 * u(rng)));
    cfg.beta1 = u(rng) < 0.2 ? 0.0 : 0.99 * std::sqrt(cfg.beta2) * u(rng);
    cfg.zeta = std::pow(10.0, -8.0 * u(rng));
    cfg.eta = std::pow(10.0, -1.0 - 2.0 * u(rng));
    const std::int64_t T = 1 + static_cast<std::int64_t>(199.0 * u(rng));
    Vec x0(oracle->dim());
    for (double& x : x0) x = normal(rng);
    RunOptions o;
    o.log = LogMode::Full;
    o.stream = static_cast<std::uint64_t>(k);
    const auto rec = run_trajectory(*oracle, cfg, x0, T, c.seed + 1, o);
    for (std::size_t i = 0; i < oracle->dim(); ++i) {
      const BoundCheck check = check_telescoping(rec, cfg, i);
      ++checks;
      csv_row(csv, "telescoping", k, T, cfg.beta1, cfg.beta2, std::nan(""), std::nan(""),
              cfg.zeta, check.lhs, check.rhs, check.slack, check.holds);
      if (!check.holds) {
        if (failed == 0) {
          err << "violation: telescoping trajectory " << k << " coordinate " << i
              << " beta1=" << csv_cell(cfg.beta1) << " beta2=" << csv_cell(cfg.beta2)
              << " zeta=" << csv_cell(cfg.zeta) << " eta=" << csv_cell(cfg.eta) << " T=" << T
              << "\n";
        }
        ++failed;
        status = kViolation;
      }
    }
  }
  out << "telescoping: " << (checks - failed) << "/" << checks << " hold\n";
  out << "wrote " << write_file(c, "lemmas.csv", [&](std::ostream& os) { os << csv.str(); })
      << "\n";
  return status;
}

// ---- run ----

int cmd_run(const ExperimentConfig& c, const Flags& f, std::ostream& out, std::ostream& err) {
  const auto oracle = make_objective(c.oracle);
  const StudyRow row = monte_carlo_convergence(*oracle, c.eps, study_settings(c, f));

  const auto csv_path =
      write_file(c, "convergence.csv", [&](std::ostream& os) { write_convergence_csv(os, row); });
  const auto sched_path =
      write_file(c, "schedule.txt", [&](std::ostream& os) { write_schedule_report(os, row.schedule); });

  Plot plot;
  plot.title = to_string(c.optimizer) + " on " + c.oracle.name + ", eps = " + csv_cell(c.eps);
  plot.x_label = "t";
  plot.y_label = "running average of ||grad f(x_t)||";
  plot.log_x = true;
  plot.log_y = true;
  for (std::size_t k = 0; k < row.per_seed.size(); ++k) {
    PlotSeries s;
    s.label = k == 0 ? "seeds" : "";
    s.color = "#1f77b4";
    for (const auto& p : row.per_seed[k].curve) {
      s.x.push_back(static_cast<double>(p.t));
      s.y.push_back(p.running_avg_grad_norm);
    }
    plot.series.push_back(std::move(s));
  }
  plot.rules.push_back({"predicted bound", row.predicted_bound});
  const auto svg_path =
      write_file(c, "convergence.svg", [&](std::ostream& os) { os << render_svg(plot); });

  out << "schedule: T=" << row.schedule.t_min << " eta=" << csv_cell(row.schedule.eta)
      << " beta2=" << csv_cell(row.schedule.beta2)
      << (row.schedule.in_regime ? "" : " (eps outside the small-eps regime)") << "\n";
  out << "mean avg ||grad f|| = " << csv_cell(row.avg_grad_norm.mean) << " (se "
      << csv_cell(row.avg_grad_norm.se) << "), bound " << csv_cell(row.predicted_bound) << ": "
      << (row.bound_holds ? "holds" : "VIOLATED") << "\n";
  out << "stage II: lhs " << csv_cell(row.stage2_lhs.mean) << " rhs "
      << csv_cell(row.stage2_rhs.mean) << ": " << (row.stage2_holds ? "holds" : "VIOLATED")
      << "\n";
  out << "pathwise violations: holder " << row.holder_violations << ", telescoping "
      << row.telescoping_violations << ", step reports " << row.report_violations << "/"
      << row.report_checks << "; diverged " << row.diverged << "/" << row.seeds << "\n";
  out << "wrote " << csv_path << ", " << svg_path << ", " << sched_path << "\n";

  if (row.divergence_failure) {
    err << "error: " << row.diverged << " of " << row.seeds << " seeds diverged\n";
    return kDivergence;
  }
  if (!row.bound_holds || !row.stage2_holds || !row.pathwise_clean()) return kViolation;
  return kOk;
}

// ---- scale-study ----

int cmd_scale_study(const ExperimentConfig& c, const Flags& f, std::ostream& out,
                    std::ostream& err) {
  const auto oracle = make_objective(c.oracle);
  const StudyResult result = scaling_study(*oracle, c.eps_list, study_settings(c, f));

  const auto csv_path =
      write_file(c, "scaling.csv", [&](std::ostream& os) { write_scaling_csv(os, result); });

  Plot plot;
  plot.title = "iterations vs 1/eps";
  plot.x_label = "1/eps";
  plot.y_label = "iterations";
  plot.log_x = true;
  plot.log_y = true;
  PlotSeries sched{"schedule T", {}, {}, "#1f77b4", false};
  PlotSeries emp{"iterations to threshold", {}, {}, "#ff7f0e", false};
  for (const auto& r : result.rows) {
    sched.x.push_back(1.0 / r.eps);
    sched.y.push_back(static_cast<double>(r.schedule.t_min));
    emp.x.push_back(1.0 / r.eps);
    emp.y.push_back(r.threshold_step.mean);
  }
  plot.series = {sched, emp};
  const auto svg_path =
      write_file(c, "scaling.svg", [&](std::ostream& os) { os << render_svg(plot); });

  for (const auto& r : result.rows) {
    out << "eps " << csv_cell(r.eps) << ": T=" << r.schedule.t_min << " threshold step "
        << csv_cell(r.threshold_step.mean) << " (" << r.threshold_reached << "/" << r.seeds
        << " reached)\n";
  }
  out << "schedule slope " << csv_cell(result.schedule_slope) << ", empirical slope "
      << csv_cell(result.empirical_slope) << "\n";
  out << "wrote " << csv_path << ", " << svg_path << "\n";

  bool clean = true;
  for (const auto& r : result.rows) {
    if (r.divergence_failure) {
      err << "error: " << r.diverged << " of " << r.seeds << " seeds diverged at eps "
          << csv_cell(r.eps) << "\n";
      return kDivergence;
    }
    clean = clean && r.pathwise_clean();
  }
  return clean ? kOk : kViolation;
}

// ---- estimate-smoothness ----

int cmd_estimate_smoothness(const ExperimentConfig& c, const Flags& f, std::ostream& out,
                            std::ostream&) {
  const auto oracle = make_objective(c.oracle);
  const auto& ts = c.trajectory;
  OptimizerConfig cfg;
  cfg.eta = ts.eta;
  cfg.beta1 = ts.optimizer == "rmsprop" ? 0.0 : ts.beta1;
  cfg.beta2 = ts.beta2;
  cfg.zeta = ts.zeta;
  cfg.check_invariants = c.strict;

  std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(c.seeds));
  parallel_for(recs.size(), f.jobs, [&](std::size_t k) {
    RunOptions o;
    o.log = LogMode::Full;
    o.stream = k;
    recs[k] = run_trajectory(*oracle, cfg, ts.x0, ts.steps, c.seed, o);
  });
  std::vector<SmoothnessSample> samples;
  std::int64_t skipped = 0;
  for (const auto& r : recs) {
    std::int64_t s = 0;
    auto part = smoothness_samples(r, *oracle, c.gammas, &s);
    samples.insert(samples.end(), part.begin(), part.end());
    skipped += s;
  }
  const auto fits = fit_l0_l1(samples, oracle->dim(), c.quantile);

  const auto samples_path = write_file(c, "smoothness_samples.csv",
                                       [&](std::ostream& os) { write_smoothness_csv(os, samples); });
  const auto fit_path = write_file(c, "smoothness_fit.csv",
                                   [&](std::ostream& os) { write_smoothness_fit_csv(os, fits); });

  const SmoothnessFit& pooled = fits.back();
  const double d_sqrt = std::sqrt(static_cast<double>(oracle->dim()));
  Plot plot;
  plot.title = "local smoothness on " + c.oracle.name;
  plot.x_label = "|df_i(x_t)|";
  plot.y_label = "local L_i";
  PlotSeries scatter{"samples", {}, {}, "#1f77b4", true};
  double x_max = 0.0;
  for (const auto& s : samples) {
    scatter.x.push_back(s.grad_abs);
    scatter.y.push_back(s.local_l);
    x_max = std::max(x_max, s.grad_abs);
  }
  PlotSeries ls{"least squares", {0.0, x_max},
                {pooled.l0_hat / d_sqrt, pooled.l0_hat / d_sqrt + pooled.l1_hat * x_max},
                "#d62728", false};
  PlotSeries env{"envelope", {0.0, x_max},
                 {pooled.l0_envelope / d_sqrt,
                  pooled.l0_envelope / d_sqrt + pooled.l1_envelope * x_max},
                 "#2ca02c", false};
  plot.series = {scatter, ls, env};
  const auto svg_path =
      write_file(c, "smoothness.svg", [&](std::ostream& os) { os << render_svg(plot); });

  out << samples.size() << " samples (" << skipped << " degenerate steps skipped)\n";
  out << "pooled fit: l0_hat " << csv_cell(pooled.l0_hat) << " l1_hat " << csv_cell(pooled.l1_hat)
      << "; envelope l0 " << csv_cell(pooled.l0_envelope) << " l1 "
      << csv_cell(pooled.l1_envelope) << "\n";
  out << "wrote " << samples_path << ", " << fit_path << ", " << svg_path << "\n";
  return kOk;
}

// ---- estimate-noise ----

int cmd_estimate_noise(const ExperimentConfig& c, const Flags&, std::ostream& out,
                       std::ostream&) {
  const auto oracle = make_objective(c.oracle);
  Engine rng = make_stream(c.seed, 0);
  const NoiseEstimate est =
      estimate_affine_noise(*oracle, c.points, c.n_samples, rng, c.common_random_numbers);

  const auto points_path = write_file(
      c, "noise_points.csv", [&](std::ostream& os) { write_noise_points_csv(os, est.points); });
  const auto fit_path =
      write_file(c, "noise_fit.csv", [&](std::ostream& os) { write_affine_fit_csv(os, est.fits); });

  const AffineFit& pooled = est.fits.back();
  Plot plot;
  plot.title = "gradient noise on " + c.oracle.name;
  plot.x_label = "|df_i(x)|";
  plot.y_label = "std of g_i";
  PlotSeries scatter{"points", {}, {}, "#1f77b4", true};
  double x_max = 0.0;
  for (const auto& p : est.points) {
    scatter.x.push_back(p.grad_abs);
    scatter.y.push_back(p.std_g);
    x_max = std::max(x_max, p.grad_abs);
  }
  PlotSeries model{"sqrt(D0 + D1 x^2)", {}, {}, "#d62728", false};
  for (int k = 0; k <= 50; ++k) {
    const double x = x_max * k / 50.0;
    model.x.push_back(x);
    model.y.push_back(std::sqrt(std::max(0.0, pooled.d0_hat + pooled.d1_hat * x * x)));
  }
  plot.series = {scatter, model};
  const auto svg_path = write_file(c, "noise.svg", [&](std::ostream& os) { os << render_svg(plot); });

  out << "pooled fit: d0_hat " << csv_cell(pooled.d0_hat) << " d1_hat " << csv_cell(pooled.d1_hat)
      << " over " << pooled.n_points << " points\n";
  out << "wrote " << points_path << ", " << fit_path << ", " << svg_path << "\n";
  return kOk;
}

// ---- parity ----

int cmd_parity(const ExperimentConfig& c, const Flags& f, std::ostream& out, std::ostream& err) {
  const auto oracle = make_objective(c.oracle);
  ParitySettings s = c.parity;
  s.master_seed = c.seed;
  s.jobs = f.jobs;
  const ParityResult r = parity_study(*oracle, s);

  const auto csv_path =
      write_file(c, "parity.csv", [&](std::ostream& os) { write_parity_csv(os, r); });

  Plot plot;
  plot.title = "training loss, modified vs original";
  plot.x_label = "t";
  plot.y_label = "f(x_t)";
  for (const ParityArm* arm : {&r.modified, &r.original}) {
    if (arm->loss_curves.empty()) continue;
    PlotSeries series;
    series.label = to_string(arm->variant);
    series.color = arm->variant == Variant::Modified ? palette(0) : palette(1);
    const std::size_t len = arm->loss_curves.front().size();
    const std::size_t stride = std::max<std::size_t>(1, len / 500);
    for (std::size_t t = 0; t < len; t += stride) {
      double mean = 0.0;
      for (const auto& curve : arm->loss_curves) mean += curve[t];
      series.x.push_back(static_cast<double>(t + 1));
      series.y.push_back(mean / static_cast<double>(arm->loss_curves.size()));
    }
    plot.series.push_back(std::move(series));
  }
  const auto svg_path =
      write_file(c, "parity.svg", [&](std::ostream& os) { os << render_svg(plot); });

  out << "final loss: modified " << csv_cell(r.modified.final_loss.mean) << ", original "
      << csv_cell(r.original.final_loss.mean) << ", relative gap " << csv_cell(r.relative_gap)
      << "\n";
  out << "wrote " << csv_path << ", " << svg_path << "\n";

  const std::int64_t diverged = r.modified.diverged + r.original.diverged;
  if (static_cast<double>(diverged) > 0.1 * static_cast<double>(2 * s.seeds)) {
    err << "error: " << diverged << " of " << 2 * s.seeds << " runs diverged\n";
    return kDivergence;
  }
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coordinate-wise modified Adam / RMSProp experiments"};
  app.require_subcommand(1);
  Flags flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify-lemmas", "Property-test the scalar sequence lemmas and the telescoping bound"},
      {"run", "Monte-Carlo convergence study at one eps"},
      {"scale-study", "Iteration complexity over a decreasing eps list"},
      {"estimate-smoothness", "Recover (L0, L1) from trajectories"},
      {"estimate-noise", "Recover (D0, D1) from repeated gradient samples"},
      {"parity", "Modified vs original Adam on the same minibatch stream"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config_path, "JSON experiment config");
    sub->add_option("--seed", flags.seed, "Master seed (overrides the config)");
    sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out_dir, "Output directory (overrides the config)");
    sub->add_flag("--strict", flags.strict, "Assert per-step invariants");
    if (name == "verify-lemmas") {
      sub->add_option("--cases", flags.cases, "Random cases per lemma");
      sub->add_flag("--inject-bug", flags.inject_bug)->group("");
    }
  }

  std::vector<std::string> args;
  for (int k = argc - 1; k >= 1; --k) args.emplace_back(argv[k]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  flags.seed_set = sub->count("--seed") > 0;
  flags.out_set = sub->count("--out") > 0;
  flags.cases_set = command == "verify-lemmas" && sub->count("--cases") > 0;

  ExperimentConfig config;
  try {
    if (!flags.config_path.empty()) {
      config = load_config(command, flags.config_path);
    } else if (command == "verify-lemmas") {
      config = parse_config(command, "{}");
    } else {
      err << "error: " << command << " needs --config PATH\n";
      return kConfigError;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  if (flags.seed_set) config.seed = flags.seed;
  if (flags.out_set) config.output_dir = flags.out_dir;
  if (flags.strict) config.strict = true;

  try {
    if (command == "verify-lemmas") return cmd_verify_lemmas(config, flags, out, err);
    if (command == "run") return cmd_run(config, flags, out, err);
    if (command == "scale-study") return cmd_scale_study(config, flags, out, err);
    if (command == "estimate-smoothness") return cmd_estimate_smoothness(config, flags, out, err);
    if (command == "estimate-noise") return cmd_estimate_noise(config, flags, out, err);
    return cmd_parity(config, flags, out, err);
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kViolation;
  } catch (const std::invalid_argument& e) {
    // Schedules and estimators reject inputs they cannot serve.
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kViolation;
  }
}

}  // namespace cwadam::cli
