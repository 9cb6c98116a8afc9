#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "config.hpp"

using namespace cwadam;
using namespace cwadam::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "cwadam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
  const fs::path p = fs::path(CWADAM_TEST_TMP) / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string write_config(const std::string& dir, const std::string& json) {
  const std::string path = dir + "/config.json";
  std::ofstream(path) << json;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

const char* kQuarticRun = R"({
  "oracle": {"name": "quartic", "params": {"dim": 3, "sigma0": 1.0, "box": 0.5}},
  "optimizer": "rmsprop", "eps": 0.5, "x1": 0.1, "seeds": 4, "max_steps": 2000
})";

}  // namespace

TEST(Config, MissingOracleNamed) {
  try {
    parse_config("run", R"({"eps": 0.2})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'oracle'"), std::string::npos);
  }
}

TEST(Config, UnknownKeyNamed) {
  try {
    parse_config("run", R"({"oracle": {"name": "quartic"}, "eps": 0.2, "epsilon": 1})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'epsilon'"), std::string::npos);
  }
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("run", "{"), ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "nope"}, "eps": 0.2})"), ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic", "params": {"d": 2}}, "eps": 0.2})"),
               ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic"}, "eps": "big"})"), ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic"}, "eps": -1})"), ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic"}})"), ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic", "params": {"dim": 2}}, "eps": 0.2, "x1": [1, 2, 3]})"),
               ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic"}, "eps": 0.2, "optimizer": "sgd"})"),
               ConfigError);
  EXPECT_THROW(parse_config("run", R"({"oracle": {"name": "quartic"}, "eps": 0.2, "log": "verbose"})"),
               ConfigError);
  EXPECT_THROW(parse_config("scale-study", R"({"oracle": {"name": "quartic"}, "eps_list": [0.4, 0.2]})"),
               ConfigError);
  EXPECT_THROW(parse_config("scale-study", R"({"oracle": {"name": "quartic"}, "eps_list": [0.1, 0.2, 0.4]})"),
               ConfigError);
  EXPECT_THROW(parse_config("estimate-noise", R"({"oracle": {"name": "gaussian_linreg"}, "points": [[1]], "n_samples": 10})"),
               ConfigError);
  EXPECT_THROW(parse_config("parity", R"({"oracle": {"name": "logistic_toy"}, "eps": 0.1})"), ConfigError);
}

TEST(Config, NumberFillsPoint) {
  const auto c = parse_config(
      "run", R"({"oracle": {"name": "quartic", "params": {"dim": 4}}, "eps": 0.2, "x1": 0.5, "log": "thinned"})");
  EXPECT_EQ(c.x1, Vec(4, 0.5));
  EXPECT_EQ(c.log, LogMode::Thinned);
  EXPECT_EQ(c.seeds, 20);
}

TEST(Config, ParityZetaDefaultsToLambdaSquared) {
  const auto c = parse_config("parity", R"({"oracle": {"name": "logistic_toy"}, "lambda": 1e-4})");
  EXPECT_DOUBLE_EQ(c.parity.zeta, 1e-8);
  EXPECT_EQ(c.parity.seeds, 5);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kConfigError);
  EXPECT_EQ(run({"frobnicate"}).code, kConfigError);
  EXPECT_EQ(run({"run"}).code, kConfigError);
  EXPECT_EQ(run({"run", "--config", "/nonexistent/config.json"}).code, kConfigError);
  EXPECT_EQ(run({"verify-lemmas", "--cases", "0"}).code, kConfigError);
  EXPECT_EQ(run({"--help"}).code, kOk);
}

TEST(Cli, MissingOracleExitCode) {
  const auto dir = tmp("missing_oracle");
  const auto r = run({"run", "--config", write_config(dir, R"({"eps": 0.2})")});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("oracle"), std::string::npos);
}

TEST(Cli, VerifyLemmas) {
  const auto dir = tmp("lemmas");
  const auto r = run({"verify-lemmas", "--cases", "300", "--out", dir});
  EXPECT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir + "/lemmas.csv");
  EXPECT_EQ(rows.size(), 1u + 900u + 9u);
}

TEST(Cli, VerifyLemmasInjectedBug) {
  const auto dir = tmp("lemmas_bug");
  const auto r = run({"verify-lemmas", "--cases", "100", "--inject-bug", "--out", dir});
  EXPECT_EQ(r.code, kViolation);
  EXPECT_NE(r.err.find("replay: beta1="), std::string::npos);
}

TEST(Cli, RunOutputsAndDeterminism) {
  const auto dir = tmp("run");
  const auto cfg = write_config(dir, kQuarticRun);
  const auto a = run({"run", "--config", cfg, "--out", dir + "/a"});
  ASSERT_EQ(a.code, kOk) << a.err;
  const auto b = run({"run", "--config", cfg, "--out", dir + "/b", "--jobs", "3"});
  ASSERT_EQ(b.code, kOk) << b.err;
  EXPECT_TRUE(fs::exists(dir + "/a/convergence.svg"));
  EXPECT_TRUE(fs::exists(dir + "/a/schedule.txt"));
  const auto rows = read_csv(dir + "/a/convergence.csv");
  EXPECT_EQ(rows.size(), 1u + 4u + 1u);
  EXPECT_EQ(rows.back()[0], "aggregate");
  EXPECT_EQ(slurp(dir + "/a/convergence.csv"), slurp(dir + "/b/convergence.csv"));
  const auto c = run({"run", "--config", cfg, "--out", dir + "/c", "--seed", "2"});
  EXPECT_NE(slurp(dir + "/a/convergence.csv"), slurp(dir + "/c/convergence.csv"));
}

TEST(Cli, ScaleStudySlopeRow) {
  const auto dir = tmp("scale");
  const auto cfg = write_config(dir, R"({
    "oracle": {"name": "quartic", "params": {"dim": 2, "sigma0": 0.3162, "box": 2.0}},
    "eps_list": [0.8, 0.4, 0.2], "x1": 2.0, "seeds": 2, "max_steps": 100000,
    "stop_at_threshold": true})");
  const auto r = run({"scale-study", "--config", cfg, "--out", dir});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir + "/scaling.csv");
  ASSERT_EQ(rows.size(), 1u + 3u + 2u);
  EXPECT_EQ(rows[4][0], "schedule_slope");
  EXPECT_EQ(rows[5][0], "empirical_slope");
  EXPECT_TRUE(fs::exists(dir + "/scaling.svg"));
}

TEST(Cli, EstimateSmoothnessExpSum) {
  const auto dir = tmp("smooth");
  const auto r = run({"estimate-smoothness", "--config",
                      std::string(CWADAM_CONFIG_DIR) + "/smoothness_exp_sum.json", "--out", dir});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir + "/smoothness_fit.csv");
  const auto l1 = column(rows[0], "l1_hat");
  const double slope = std::stod(rows.back()[l1]);
  EXPECT_GE(slope, 0.9);
  EXPECT_LE(slope, 1.1);
  EXPECT_TRUE(fs::exists(dir + "/smoothness.svg"));
  EXPECT_TRUE(fs::exists(dir + "/smoothness_samples.csv"));
}

TEST(Cli, EstimateNoise) {
  const auto dir = tmp("noise");
  const auto r = run({"estimate-noise", "--config",
                      std::string(CWADAM_CONFIG_DIR) + "/noise_gaussian_linreg.json", "--out", dir});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir + "/noise_fit.csv");
  const double d1 = std::stod(rows.back()[column(rows[0], "d1_hat")]);
  EXPECT_NEAR(d1, 3.0, 0.3);
  EXPECT_TRUE(fs::exists(dir + "/noise.svg"));
}

TEST(Cli, ParityGapRow) {
  const auto dir = tmp("parity");
  const auto cfg = write_config(dir, R"({"oracle": {"name": "logistic_toy"}, "steps": 300, "seeds": 2})");
  const auto r = run({"parity", "--config", cfg, "--out", dir});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = read_csv(dir + "/parity.csv");
  EXPECT_EQ(rows.back()[0], "gap");
  EXPECT_TRUE(fs::exists(dir + "/parity.svg"));
}

// D1 = 0 leaves no admissible Adam schedule.
TEST(Cli, AdamWithoutMultiplicativeNoiseIsConfigError) {
  const auto dir = tmp("adam_d1");
  const auto cfg = write_config(dir, R"({
    "oracle": {"name": "logistic_toy"}, "optimizer": "adam", "eps": 0.2, "seeds": 2})");
  const auto r = run({"run", "--config", cfg, "--out", dir});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("beta2"), std::string::npos) << r.err;
}
