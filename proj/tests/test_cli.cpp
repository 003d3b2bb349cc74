#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hcg/cli.hpp"

using namespace hcg;
namespace fs = std::filesystem;

namespace {

const char* kProp1 = R"(# reference scenario
command = simulate
[game]
mu1 = 0.3
mu2 = 0.2
l = 0.5
pursuer = estimating
evader = deceptive

[initial]
x0 = 2.152
y0 = -0.214
)";

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError for:\n" << text;
  return ConfigError(0, "", "");
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hcg_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(ParseConfig, ReferenceScenario) {
  const RunConfig c = parse_config(kProp1);
  EXPECT_EQ(c.command, Command::Simulate);
  EXPECT_EQ(c.mu1, 0.3);
  EXPECT_EQ(c.mu2, 0.2);
  EXPECT_EQ(c.l, 0.5);
  ASSERT_TRUE(c.initial);
  EXPECT_EQ(c.initial->x, 2.152);
  EXPECT_EQ(c.initial->y, -0.214);
  EXPECT_EQ(c.pursuer, PursuerMode::Estimating);
  EXPECT_EQ(c.evader, EvaderPolicy::Kind::Deceptive);
  EXPECT_EQ(c.dt, 1e-3);
}

TEST(ParseConfig, OrderingDiagnostic) {
  const auto e = parse_error("[game]\nmu1 = 0.2\nmu2 = 0.3\nl = 0.5\n");
  EXPECT_EQ(e.key(), "mu2");
  EXPECT_EQ(e.line(), 3);
  EXPECT_NE(std::string(e.what()).find("must not be below"), std::string::npos);
}

TEST(ParseConfig, MissingKeyNamed) {
  const auto e = parse_error("[game]\nmu1 = 0.3\n");
  EXPECT_EQ(e.key(), "l");
  EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
}

TEST(ParseConfig, Rejections) {
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\ncolour = red\n").key(), "colour");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\nmu1 = 0.2\n").line(), 4);
  EXPECT_EQ(parse_error("[gme]\nmu1 = 0.3\n").line(), 1);
  EXPECT_EQ(parse_error("mu1 = 0.3\n").key(), "mu1");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.8\nl = 0.7\n").key(), "mu1");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = -1\n").key(), "l");
  EXPECT_EQ(parse_error("[game]\nmu1 = abc\nl = 0.5\n").key(), "mu1");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\n[integrator]\ndt = 0\n").key(), "dt");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\n[integrator]\nd_tau = 0.01\n").key(), "d_tau");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\n[integrator]\nn_phi = 1.5\n").key(), "n_phi");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\npursuer = psychic\n").key(), "pursuer");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\n[initial]\nx0 = 1\n").key(), "y0");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\n[sweep]\nx_min = 1\n").key(), "x_max");
  EXPECT_EQ(parse_error("[game]\nmu1 = 0.3\nl = 0.5\ntrigger = time\n").key(), "switch_time");
  EXPECT_EQ(parse_error("command = plot\n[game]\nmu1 = 0.3\nl = 0.5\n").key(), "command");
  EXPECT_EQ(parse_error("[game\n").line(), 1);
}

TEST(ParseConfig, CommentsAndDefaults) {
  const RunConfig c = parse_config("; header\n[game]  # trailing\nmu1 = 0.3 ; note\nl = 0.5\n");
  EXPECT_EQ(c.mu1, 0.3);
  EXPECT_EQ(c.mu2, 0.3);
  EXPECT_FALSE(c.command);
  EXPECT_FALSE(c.initial);
  EXPECT_EQ(c.dir, ".");
}

TEST(SerializeConfig, RoundTrip) {
  EXPECT_EQ(parse_config(serialize_config(parse_config(kProp1))), parse_config(kProp1));
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> M(0.05, 0.6), L(0.1, 0.75), U(-5, 5), D(1e-5, 9e-3);
  for (int i = 0; i < 200; ++i) {
    RunConfig c;
    c.mu1 = M(rng);
    c.mu2 = c.mu1 * std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    c.l = L(rng);
    if (c.mu1 * c.mu1 + c.l * c.l >= 1.0) continue;
    c.command = static_cast<Command>(i % 4);
    c.pursuer = i % 2 ? PursuerMode::Estimating : PursuerMode::Informed;
    c.evader = i % 3 ? EvaderPolicy::Kind::Deceptive : EvaderPolicy::Kind::Truthful;
    if (i % 5 == 0) {
      c.trigger = EvaderPolicy::Trigger::Time;
      c.switch_time = std::abs(U(rng));
    }
    if (i % 2) c.initial = RelState{U(rng), U(rng)};
    c.dt = D(rng);
    c.d_tau = D(rng);
    c.t_max = 10 + std::abs(U(rng));
    c.n_phi = 2 + i;
    c.estimator = i % 4 ? EstimatorTiming::Immediate : EstimatorTiming::OneStepLag;
    c.equivocal = i % 6 ? EquivocalBranch::Depart : EquivocalBranch::Stay;
    if (i % 3 == 0) c.window = SweepWindow{-U(rng) - 6, U(rng) + 6, -3, 3};
    c.spacing = D(rng) * 100;
    c.workers = static_cast<unsigned>(i % 7);
    c.dir = "out/run_" + std::to_string(i);
    const std::string text = serialize_config(c);
    EXPECT_EQ(parse_config(text), c) << text;
    EXPECT_EQ(serialize_config(parse_config(text)), text);
  }
}

TEST(Execute, ClassifyPrintsLabel) {
  RunConfig c = parse_config("command = classify\n[game]\nmu1 = 0.3\nl = 0.5\n[initial]\nx0 = 0\ny0 = 1.5\n");
  std::ostringstream out, err;
  EXPECT_EQ(execute(c, out, err), kExitOk);
  EXPECT_EQ(out.str(), "UniversalPositive\n");
}

TEST(Execute, SimulateWritesTrajectoryAndSummary) {
  RunConfig c = parse_config(kProp1);
  c.dir = temp_dir("sim").string();
  std::ostringstream out, err;
  ASSERT_EQ(execute(c, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("capture_time=8.296"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("switches=1"), std::string::npos);
  std::ifstream f(fs::path(c.dir) / "trajectory.csv");
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "t,x,y,u,psi,mu_cmd,mu_hat,region,event");
  fs::remove_all(c.dir);
}

TEST(Execute, NonCaptureExitCode) {
  RunConfig c = parse_config(kProp1);
  c.t_max = 0.5;
  c.dir = temp_dir("nocap").string();
  std::ostringstream out, err;
  EXPECT_EQ(execute(c, out, err), kExitNoCapture);
  fs::remove_all(c.dir);
}

TEST(Execute, GeometryWritesBothCurveFiles) {
  RunConfig c = parse_config("command = geometry\n[game]\nmu1 = 0.3\nmu2 = 0.2\nl = 0.5\n");
  c.dir = temp_dir("geo").string();
  std::ostringstream out, err;
  ASSERT_EQ(execute(c, out, err), kExitOk) << err.str();
  for (const char* name : {"curves_mu1.csv", "curves_mu2.csv"}) {
    std::ifstream f(fs::path(c.dir) / name);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "family,branch_id,tau,x,y");
  }
  fs::remove_all(c.dir);
}

TEST(Execute, SweepThreeByThree) {
  RunConfig c = parse_config(
      "command = sweep\n[game]\nmu1 = 0.3\nmu2 = 0.2\nl = 0.5\n"
      "[sweep]\nx_min = 1\nx_max = 2\ny_min = -1\ny_max = 0\nspacing = 0.5\n");
  c.dir = temp_dir("sweep").string();
  std::ostringstream out, err;
  ASSERT_EQ(execute(c, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("cells=9"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("max_gain="), std::string::npos);
  EXPECT_NE(out.str().find("advantageous="), std::string::npos);
  std::ifstream f(fs::path(c.dir) / "advantage.csv");
  std::string line;
  int rows = -1;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 9);
  fs::remove_all(c.dir);
}

TEST(Execute, IoFailureReportsPath) {
  RunConfig c = parse_config(kProp1);
  c.dir = "/proc/hcg-not-writable";
  std::ostringstream out, err;
  EXPECT_EQ(execute(c, out, err), kExitFailure);
  EXPECT_NE(err.str().find("/proc/hcg-not-writable"), std::string::npos) << err.str();
}

TEST(Execute, MissingCommandAndInitial) {
  std::ostringstream out, err;
  EXPECT_EQ(execute(parse_config("[game]\nmu1 = 0.3\nl = 0.5\n"), out, err), kExitConfig);
  EXPECT_EQ(execute(parse_config("command = simulate\n[game]\nmu1 = 0.3\nl = 0.5\n"), out, err), kExitConfig);
}

TEST(LoadConfig, ShippedConfigsParse) {
  const fs::path dir = fs::path(HCG_SOURCE_DIR) / "configs";
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 4);
}
