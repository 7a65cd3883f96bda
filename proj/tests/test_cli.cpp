#include "forge/cli/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace forge;
using namespace forge::cli;

namespace {

ExperimentConfig parse_ok(const std::string& text) {
  const ParseResult r = parse_config(text);
  std::string diag;
  for (const auto& e : r.errors) diag += e.str() + "\n";
  EXPECT_TRUE(r.ok()) << diag;
  return *r.config;
}

std::vector<std::string> diagnostics(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& e : parse_config(text).errors) out.push_back(e.str());
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("forge_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSimulate = "experiment = simulate\nseed = 7\n[protocol]\nname = xor_coin\nn = 2\nd = 1\nL = 1\n";

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const ExperimentConfig c = parse_ok("experiment = simulate\n[protocol]\nname = xor_coin\n");
  EXPECT_EQ(c.experiment, ExperimentKind::kSimulate);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.limits.workers, 1u);
  EXPECT_EQ(c.limits.cap, kDefaultEnumerationCap);
  EXPECT_FALSE(c.output_dir);
  EXPECT_FALSE(c.sampling);
}

TEST(Config, ParsesListsRationalsAndCases) {
  const ExperimentConfig c = parse_ok(
      "experiment = verify-claims   # trailing comment\n"
      "; full-line comment\n"
      "[claims]\ncases = [2x2, 3x2]\neps = [1/10, 1/2]\n");
  ASSERT_TRUE(c.claims);
  EXPECT_EQ(c.claims->cases, (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 2}, {3, 2}}));
  EXPECT_EQ(c.claims->eps, (std::vector<Rational>{Rational(1, 10), Rational(1, 2)}));
}

TEST(Config, Diagnostics) {
  EXPECT_EQ(diagnostics("experiment = security-sweep\n[protocol]\nname = xor_coin\n[compression]\nell = 1\n"
                        "[security]\nt = 1\n"),
            std::vector<std::string>{"security.M required"});
  const auto dup = diagnostics("experiment = simulate\nseed = 1\nseed = 2\n[protocol]\nname = xor_coin\n");
  ASSERT_EQ(dup.size(), 1u);
  EXPECT_NE(dup[0].find("line 2"), std::string::npos);
  EXPECT_NE(dup[0].find("line 3"), std::string::npos);
  EXPECT_EQ(diagnostics("experiment = simulate\nbogus = 1\n[protocol]\nname = xor_coin\n"),
            std::vector<std::string>{"line 2: bogus: unknown key"});
  EXPECT_EQ(diagnostics("experiment = simulate\n[protocol]\nname = xor_coin\nn = -3\n"),
            std::vector<std::string>{"line 4: protocol.n: expected a nonnegative integer, got '-3'"});
  EXPECT_FALSE(diagnostics("experiment = nope\n").empty());
}

TEST(Run, SimulateXor) {
  const RunOutcome run = run_experiment(parse_ok(kSimulate));
  EXPECT_EQ(run.exit_code, kExitOk);
  const auto& r = run.record.at("result");
  EXPECT_EQ(distribution_from_json(r.at("honest_distribution")), Distribution::uniform(1));
  EXPECT_EQ(run.record.at("experiment"), "simulate");
  EXPECT_EQ(run.record.at("seed"), 7);
  EXPECT_EQ(run.record.at("config_hash").get<std::string>().size(), 16u);
}

TEST(Run, VerifyClaims) {
  const RunOutcome run = run_experiment(parse_ok("experiment = verify-claims\nseed = 11\n[claims]\ncases = [3x3]\n"));
  EXPECT_EQ(run.exit_code, kExitOk);
  const auto& claim = run.record.at("result").at("claims").at(0);
  EXPECT_EQ(claim.at("functions"), 27);
  EXPECT_TRUE(claim.at("violations").empty());
}

TEST(Run, CompressSweepWritesDataFiles) {
  const RunOutcome run = run_experiment(parse_ok(
      "experiment = compress-sweep\nseed = 1\n[protocol]\nname = xor_coin\nn = 2\nL = 2\n"
      "[compression]\nell = [1, 2]\nsamples = 20\nthresholds = [1/100]\n"));
  ASSERT_EQ(run.exit_code, kExitOk) << run.record.dump();
  const auto dir = scratch("compress");
  write_outputs(run, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "compress.dat"));
  EXPECT_TRUE(std::filesystem::exists(dir / "compress.csv"));
  const std::string dat = slurp(dir / "compress.dat");
  EXPECT_EQ(dat.rfind("# ", 0), 0u);
  write_outputs(run, dir);  // report.json is appended to
  const std::string report = slurp(dir / "report.json");
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 2);
}

TEST(Run, ResultsDoNotDependOnWorkers) {
  for (const std::string text :
       {std::string(kSimulate) + "[sampling]\nB = 5000\n[adversary]\nstrategy = last_speaker\nt = [0, 1]\ntarget = 0\n",
        std::string("experiment = compress-sweep\nseed = 3\n[protocol]\nname = xor_coin\nn = 2\nL = 2\n"
                    "[compression]\nell = [1, 2]\nsamples = 40\n"),
        std::string("experiment = chernoff\nseed = 5\n[protocol]\nname = xor_coin\nn = 3\n[sampling]\nB = 20000\n")}) {
    const ExperimentConfig cfg = parse_ok(text);
    const RunOutcome a = run_experiment(cfg, {1u, {}});
    const RunOutcome b = run_experiment(cfg, {4u, {}});
    EXPECT_EQ(a.exit_code, kExitOk) << a.record.dump();
    EXPECT_EQ(payload_bytes(a), payload_bytes(b)) << text;
  }
}

TEST(Run, CapExceededExitsTwo) {
  const RunOutcome run =
      run_experiment(parse_ok("experiment = verify-claims\n[claims]\ncases = [10x10]\n[limits]\ncap = 1000\n"));
  EXPECT_EQ(run.exit_code, kExitCap);
  EXPECT_EQ(run.record.at("error").at("code"), "CapExceeded");
  EXPECT_FALSE(run.record.contains("result"));
}

#ifdef FORGE_BINARY
TEST(Binary, ExitCodesAndOutputs) {
  const auto dir = scratch("binary");
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return (dir / name).string();
  };
  const auto run = [&](const std::string& args) {
    const int status = std::system((std::string(FORGE_BINARY) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(run(write("ok.cfg", kSimulate) + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
  EXPECT_EQ(run(write("bad.cfg", "experiment = simulate\nbogus = 1\n")), 1);
  EXPECT_EQ(run((dir / "missing.cfg").string()), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(write("cap.cfg", "experiment = verify-claims\n[claims]\ncases = [10x10]\n[limits]\ncap = 1000\n") +
                " --out " + (dir / "cap").string()),
            2);
}
#endif
