#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ddslit/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ddslit_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(DDSLIT_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = slurp(err);
  return o;
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST(Cli, SimulateBothModes) {
  const auto dir = scratch("simulate");
  const auto out = dir / "run1";
  const auto o = run_cli("simulate --n 1000 --seed 7 --x-left -0.015 --x-right 0.5 --mode both --out " + out.string(), dir);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto records = ddslit::read_records(out / "records.txt");
  EXPECT_EQ(records.size(), 2000u);
  EXPECT_TRUE(fs::exists(out / "report.txt"));
  for (const char* name : {"hist_collapse_yL.csv", "hist_collapse_yR.csv", "hist_free_tL.csv", "hist_free_tR.csv",
                           "hist_collapse_joint_y.csv"})
    EXPECT_TRUE(fs::exists(out / name)) << name;
  EXPECT_NE(slurp(out / "report.txt").find("x-left = 0.014999999999999999"), std::string::npos);
}

TEST(Cli, MissingConfigFile) {
  const auto dir = scratch("missing");
  const auto o = run_cli("simulate --config " + (dir / "nope.toml").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("nope.toml"), std::string::npos) << o.err;
}

TEST(Cli, ConfigFileSetsOptions) {
  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "n = 40\nseed = 3\nmode = \"free\"\nx-left = 0.02\n";
  }
  const auto o = run_cli("simulate --config " + (dir / "run.toml").string() + " --out " + (dir / "o").string(), dir);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto records = ddslit::read_records(dir / "o" / "records.txt");
  ASSERT_EQ(records.size(), 40u);
  EXPECT_EQ(records[0].mode, ddslit::TrajectoryMode::free);
  EXPECT_NE(slurp(dir / "o" / "report.txt").find("x-left = 0.02"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run_cli("", dir).code, 1);
  EXPECT_EQ(run_cli("simulate --bogus 3", dir).code, 1);
  EXPECT_EQ(run_cli("simulate --mode sideways", dir).code, 1);
  EXPECT_EQ(run_cli("simulate --n 0 --out " + dir.string(), dir).code, 1);
  EXPECT_EQ(run_cli("simulate --x-right -1 --out " + dir.string(), dir).code, 1);
  EXPECT_EQ(run_cli("simulate --sampler narrowed --sigma-scale 2 --out " + dir.string(), dir).code, 1);
}

TEST(Cli, TrajectoriesWritesPairs) {
  const auto dir = scratch("paths");
  const auto o = run_cli("trajectories --paths 10 --seed 2 --out " + (dir / "p").string(), dir);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(count_files(dir / "p", "path_"), 20u);
  const auto head = slurp(dir / "p" / "path_0_collapse.csv").substr(0, 14);
  EXPECT_EQ(head, "t,x1,y1,x2,y2\n");
}

TEST(Cli, ZeroStrideRejected) {
  const auto dir = scratch("stride");
  EXPECT_EQ(run_cli("trajectories --stride 0 --out " + dir.string(), dir).code, 1);
}

TEST(Cli, SampleCheckPasses) {
  const auto dir = scratch("sample");
  const auto o = run_cli("sample-check --n 20000 --seed 5 --bins 40 --out " + dir.string(), dir);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto report = slurp(dir / "sample_check.txt");
  EXPECT_NE(report.find("[y2]"), std::string::npos);
  EXPECT_EQ(count_files(dir, "sample_hist_"), 4u);
}

TEST(Cli, SweepWritesLocalityReport) {
  const auto dir = scratch("sweep");
  const auto o = run_cli("sweep --n 200 --seed 1 --x-left 0.007 0.015 --out " + (dir / "s").string(), dir);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir / "s" / "records_xl_0.007.txt"));
  EXPECT_TRUE(fs::exists(dir / "s" / "records_xl_0.015.txt"));
  const auto report = slurp(dir / "s" / "locality_report.txt");
  EXPECT_NE(report.find("[[comparison]]"), std::string::npos);
  EXPECT_NE(report.find("any_reject_at_0.01"), std::string::npos);
}

TEST(Cli, CensorStormIsRuntimeFailure) {
  const auto dir = scratch("censor");
  EXPECT_EQ(run_cli("simulate --n 20 --t-max 1 --out " + dir.string(), dir).code, 2);
}
