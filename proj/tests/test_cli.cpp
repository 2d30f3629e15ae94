// End-to-end tests of the gtlab executable: exit codes, artifacts and
// byte-identical reruns.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef GTLAB_CLI_PATH
#error "GTLAB_CLI_PATH must point at the gtlab executable"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GTLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gtlab_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, HelpSucceeds) { EXPECT_EQ(run_cli("--help"), 0); }

TEST(Cli, AppendixAWritesOrderedRates) {
  const auto dir = scratch("appendix");
  ASSERT_EQ(run_cli("appendix-a --out " + dir.string()), 0);
  const std::string summary = slurp(dir / "summary.csv");
  EXPECT_NE(summary.find("ordering,1,1,0,alpha_star < alpha_max < alpha_BS"), std::string::npos);
  EXPECT_NE(slurp(dir / "rates.csv").find("alpha_BS,0.8684"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::string args = " --sigma pc:1@pi,4@2pi --n 64 --t-final 5 --trajectories 3 --seed 11 --out ";
  ASSERT_EQ(run_cli("simulate-2v" + args + a.string()), 0);
  ASSERT_EQ(run_cli("simulate-2v" + args + b.string() + " --threads 2"), 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, ValidationFailuresExitTwo) {
  EXPECT_EQ(run_cli("simulate-2v --n 7"), 2);
  EXPECT_EQ(run_cli("simulate-2v --sigma bogus:1"), 2);
  EXPECT_EQ(run_cli("simulate-2v --bogus-flag"), 2);
  EXPECT_EQ(run_cli("simulate-3v --alpha 0.55 --theta 0.7348469228"), 2);
  EXPECT_EQ(run_cli("poincare --sigma const:1"), 2);
  EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, NumericalFailuresExitThree) {
  // σ̃ = (5, 1): the least real part lies beyond the default strip.
  EXPECT_EQ(run_cli("telegrapher --no-plots --out " + scratch("strip").string() +
                    " --sigma pc:1.5915494309189535@pi,0.3183098861837907@2pi"),
            3);
  // The decay reaches the fit floor before the window opens.
  EXPECT_EQ(run_cli("simulate-2v --sigma const:1 --n 32 --t-final 400 --out " + scratch("floor").string()), 3);
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "modal.ini");
    cfg << "scenario = modal-report\nsigma = 5\nk_max = 4\nout = " << (dir / "from_config").string() << "\n";
  }
  ASSERT_EQ(run_cli("run " + (dir / "modal.ini").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "modal.csv"));
  ASSERT_EQ(run_cli("modal-report --config " + (dir / "modal.ini").string() + " --k-max 6 --out " +
                    (dir / "override").string()),
            0);
  const std::string csv = slurp(dir / "override" / "modal.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(run_cli("poincare --config " + (dir / "modal.ini").string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, RateCurveAndRates) {
  const auto dir = scratch("curve");
  ASSERT_EQ(run_cli("rate-curve --sigma-min 0.5 --sigma-max 4 --points 8 --out " + dir.string()), 0);
  const std::string csv = slurp(dir / "rate_curve.csv");
  EXPECT_NE(csv.find("2,1,defective"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "rate_curve.svg"));
  ASSERT_EQ(run_cli("rates --sigma const:1 --out " + (dir / "rates").string()), 0);
  EXPECT_NE(slurp(dir / "rates" / "rates.csv").find("ConstantSharp,1,1,"), std::string::npos);
  EXPECT_EQ(run_cli("rates --sigma const:2"), 2);
  fs::remove_all(dir);
}
