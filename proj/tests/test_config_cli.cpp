// Configuration parsing and the liostab command line.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "lio/commands.hpp"

using namespace lio;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path dir = fs::path(::testing::TempDir()) / ("lio_cli_" + std::to_string(++counter));
  fs::create_directories(dir);
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" LIOSTAB_PATH "\" " + args + " >\"" + o.string() +
                          "\" 2>\"" + e.string() + "\"";
  const int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::path(::testing::TempDir()) / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmallScan =
    "[operator]\nkernel = conv-exp:scale=1\nL = 8\nn = 3\n"
    "[weights]\nlist = trivial; power:alpha=0.5\np = 2, 2\n"
    "[scan]\nz = 2, 0.5\n";

}  // namespace

// ---- configuration ----------------------------------------------------------------------

TEST(Config, TextRoundTrip) {
  RunConfig c;
  c.seed = 42;
  c.kernel = "bessel:gamma=2.5";
  c.L = 16;
  c.n = 4;
  c.weights = {"trivial", "power:alpha=-0.25"};
  c.p = {2.0, 1.5};
  c.z = {{0.1, 0.0}, {0.5, -0.25}, {0.0, 1.0 / 3.0}};
  c.delta_grid = {0.5, 0.1};
  const auto back = RunConfig::parse(c.to_text());
  EXPECT_EQ(back, c);
  EXPECT_EQ(RunConfig::parse(RunConfig{}.to_text()), RunConfig{});
}

TEST(Config, ComplexNumbers) {
  EXPECT_EQ(cfg::parse_complex("z", "0.5"), cplx(0.5, 0.0));
  EXPECT_EQ(cfg::parse_complex("z", "0.5+0.25i"), cplx(0.5, 0.25));
  EXPECT_EQ(cfg::parse_complex("z", "-1e-3-2i"), cplx(-1e-3, -2.0));
  EXPECT_EQ(cfg::parse_complex("z", "-i"), cplx(0.0, -1.0));
  EXPECT_EQ(cfg::parse_complex("z", "3i"), cplx(0.0, 3.0));
  EXPECT_THROW(cfg::parse_complex("z", "1+xi"), ParseError);
  EXPECT_EQ(cfg::exact(cplx(0.5, -0.25)), "0.5-0.25i");
}

TEST(Config, UnknownAndDuplicateFieldsAreRejected) {
  try {
    RunConfig::parse("[operator]\nkernal = zero\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "operator.kernal");
  }
  try {
    RunConfig::parse("[run]\nseed = 1\nseed = 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "run.seed");
  }
}

TEST(Config, MalformedWeightNamesItsField) {
  try {
    RunConfig::parse("[weights]\nlist = trivial; power:alpa=0.5\np = 2, 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "weights.list[1]");
  }
  try {
    RunConfig::parse("[weights]\nlist = trivial\np = 2, 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "weights.p");
  }
}

TEST(Config, RangeChecks) {
  EXPECT_THROW(RunConfig::parse("[operator]\nd = 3\n"), ParseError);
  EXPECT_THROW(RunConfig::parse("[operator]\nalpha = 1.5\n"), ParseError);
  EXPECT_THROW(RunConfig::parse("[scan]\ntheta_low = 0.3\n"), ParseError);
  EXPECT_THROW(RunConfig::parse("[run]\nseed = -1\n"), ParseError);
}

TEST(Config, OutputDirectoryFromEnvironment) {
  RunConfig c;
  ::setenv("LIO_OUT_DIR", "/tmp/lio-env-out", 1);
  c.apply_environment();
  ::unsetenv("LIO_OUT_DIR");
  EXPECT_EQ(c.out, "/tmp/lio-env-out");
}

// ---- command line ------------------------------------------------------------------------

TEST(Cli, HelpListsCommands) {
  const auto r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  for (auto& n : command_names()) EXPECT_NE(r.out.find(n), std::string::npos) << n;
}

TEST(Cli, MissingCommandIsAUsageError) {
  const auto r = run_cli("");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, MalformedWeightExitsTwoWithField) {
  const auto cfgp = write_config("bad_weight.ini", "[weights]\nlist = power:alpha=x\np = 2\n");
  const auto r = run_cli("stability-scan --config \"" + cfgp.string() + "\"");
  EXPECT_EQ(r.code, 2);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j["error"], "parse");
  EXPECT_EQ(j["field"], "weights.list[0]");
}

TEST(Cli, NonApWeightIsAConfigurationError) {
  const auto cfgp = write_config("non_ap.ini", "[operator]\nL = 4\nn = 2\n[weights]\nlist = power:alpha=2\np = 2\n");
  const auto r = run_cli("stability-scan --config \"" + cfgp.string() + "\" --out \"" +
                         (fs::path(::testing::TempDir()) / "lio_nonap").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"], "precondition");
}

TEST(Cli, StabilityScanFarPointAndDeterministicBytes) {
  const auto cfgp = write_config("scan.ini", kSmallScan);
  const fs::path o1 = fs::path(::testing::TempDir()) / "lio_scan_a", o2 = fs::path(::testing::TempDir()) / "lio_scan_b";
  const auto r1 = run_cli("stability-scan --config \"" + cfgp.string() + "\" --out \"" + o1.string() + "\"");
  ASSERT_EQ(r1.code, 0) << r1.err;
  // the flag wins over the environment
  const auto r2 = run_cli("stability-scan --config \"" + cfgp.string() + "\" --out \"" + o2.string() + "\"",
                          "LIO_OUT_DIR=/nonexistent/never");
  ASSERT_EQ(r2.code, 0) << r2.err;
  const auto j = json::parse(slurp(o1 / "stability_scan.json"));
  const auto& far = j["points"][0];
  EXPECT_EQ(far["z"][0], 2.0);
  for (auto& pr : far["pairs"]) {
    EXPECT_NEAR(pr["s_hat"].get<double>(), 1.0, 0.05);
    EXPECT_EQ(pr["class"], "out");
  }
  for (auto& pr : j["points"][1]["pairs"]) EXPECT_EQ(pr["class"], "in");
  for (const char* f : {"stability_scan.csv", "stability_scan.json"})
    EXPECT_EQ(slurp(o1 / f), slurp(o2 / f)) << f;
  const std::string csv = slurp(o1 / "stability_scan.csv");
  EXPECT_EQ(csv.rfind("statement,thm:stability-set\n", 0), 0u);
  const auto summary = json::parse(r1.out);
  EXPECT_EQ(summary["command"], "stability-scan");
  EXPECT_EQ(summary["exit"], 0);
}

TEST(Cli, EnvironmentSetsOutputDirectory) {
  const fs::path o = fs::path(::testing::TempDir()) / "lio_env_dir";
  fs::remove_all(o);
  const auto r = run_cli("bootstrap-plan", "LIO_OUT_DIR=\"" + o.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(o / "bootstrap_plan.json"));
  const auto j = json::parse(slurp(o / "bootstrap_plan.json"));
  EXPECT_EQ(j["valid"], true);
}

TEST(Cli, WrittenConfigReloadsToTheSameRun) {
  const fs::path o = fs::path(::testing::TempDir()) / "lio_reload";
  const auto r = run_cli("bootstrap-plan --seed 7 --out \"" + o.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = RunConfig::load((o / "config.ini").string());
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out, o.string());
}
