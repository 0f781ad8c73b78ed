#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "invfilt/config.hpp"

namespace {

namespace fs = std::filesystem;
const fs::path kConfigs = INVFILT_CONFIG_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(INVFILT_CLI) + "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string cfg(const char* name) { return "'" + (kConfigs / name).string() + "'"; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "invfilt_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

TEST(Cli, ZerosOfCaseOne) {
  const Result r = run("zeros " + cfg("case1.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("zeros: {1.5}"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("NonMinimumPhase"), std::string::npos);
}

TEST(Cli, ZerosOfCaseThreeOnUnitCircle) {
  const Result r = run("zeros " + cfg("case3.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("UnitCircleZeros"), std::string::npos) << r.out;
}

TEST(Cli, CheckCaseTwo) {
  const Result r = run("check " + cfg("case2.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("rotation: accepted"), std::string::npos);
}

TEST(Cli, DesignPrintsCaseOneMatrices) {
  const Result r = run("design " + cfg("case1.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* s : {"K1 (2x2)", "Atilde (2x2)", "[1.2, 0.6]", "[  1.2, -0.15]", "closed_loop_spectrum: {0.1, -0.1}",
                        "delay: 2"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s << "\n" << r.out;
  }
}

TEST(Cli, DesignThetaFlagIsDegrees) {
  const Result r = run("design " + cfg("case1.json") + " --theta 5");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("gain_norm: 51."), std::string::npos) << r.out;
}

TEST(Cli, DesignPolesFlag) {
  const Result r = run("design " + cfg("case1.json") + " --poles 0.2,-0.2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("placed_poles: {0.2, -0.2}"), std::string::npos) << r.out;
  EXPECT_EQ(run("design " + cfg("case1.json") + " --poles 0.1:0.1,0.1:-0.1").code, 0);
}

TEST(Cli, SeedPrecedence) {
  auto gain = [](const Result& r) { return r.out.substr(r.out.find("gain_norm")); };
  const Result config = run("design " + cfg("case4.json"));
  const Result env = run("design " + cfg("case4.json"), "INVFILT_SEED=7");
  const Result flag = run("design " + cfg("case4.json") + " --seed 7", "INVFILT_SEED=3");
  const Result flag_only = run("design " + cfg("case4.json") + " --seed 7");
  ASSERT_EQ(config.code, 0);
  ASSERT_EQ(env.code, 0);
  EXPECT_NE(gain(config), gain(env));
  EXPECT_EQ(gain(flag), gain(env));
  EXPECT_EQ(gain(flag_only), gain(env));
  EXPECT_EQ(run("design " + cfg("case4.json"), "INVFILT_SEED=abc").code, 2);
}

TEST(Cli, SimulateWritesTrace) {
  const fs::path out = scratch("case1.csv");
  const Result r = run("simulate " + cfg("case1.json") + " --out '" + out.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  const invfilt::SimTrace t = invfilt::read_trace_csv(out);
  EXPECT_EQ(t.k.size(), 78u);
  EXPECT_LT(t.abs_err.back()(0), 1e-6);
}

TEST(Cli, GlobalStepsFlag) {
  const fs::path out = scratch("short.csv");
  ASSERT_EQ(run("--steps 30 simulate " + cfg("case1.json") + " --out '" + out.string() + "'").code, 0);
  EXPECT_EQ(invfilt::read_trace_csv(out).k.size(), 28u);
}

TEST(Cli, CaseWritesOneCsvPerRun) {
  const fs::path dir = scratch("case1_out");
  fs::remove_all(dir);
  const Result r = run("case 1 --out-dir '" + dir.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "case1_theta5.csv"));
  EXPECT_TRUE(fs::exists(dir / "case1_theta45.csv"));
}

TEST(Cli, SweepTheta) {
  const Result r = run("sweep-theta " + cfg("case1.json") + " --from 5 --to 45 --steps 5");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  EXPECT_NE(r.out.find("theta_deg,pbh_margin,gain_norm,status"), std::string::npos);
}

TEST(Cli, ExitCodeTwoForInputErrors) {
  EXPECT_EQ(run("zeros /nonexistent/config.json").code, 2);
  EXPECT_EQ(run("zeros '" + write("bad.json", "{\"system\": [").string() + "'").code, 2);
  EXPECT_EQ(run("zeros '" +
                write("dims.json", R"({"system": {"A": [[1,0],[0,1]], "B": [[1],[1],[1]], "C": [[1,0]], "D": [[0]]}})")
                    .string() +
                "'")
                .code,
            2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("case 7").code, 2);
  EXPECT_EQ(run("design " + cfg("case1.json") + " --theta 5 --seed 1").code, 2);
  EXPECT_EQ(run("design " + cfg("case1.json") + " --poles x").code, 2);
}

TEST(Cli, ExitCodeThreeForDesignErrors) {
  const fs::path z1 = write("zero_at_one.json",
                            R"({"system": {"A": [[0.5]], "B": [[1]], "C": [[-0.5]], "D": [[1]]}})");
  const Result r = run("design '" + z1.string() + "'");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("ZeroAtOne"), std::string::npos);
  EXPECT_EQ(run("check '" + z1.string() + "'").code, 3);
  EXPECT_EQ(run("design " + cfg("case1.json") + " --poles 0.1").code, 3);
}

TEST(Cli, ExitCodeFourForRuntimeErrors) {
  const fs::path p = write(
      "diverge.json",
      R"({"system": {"A": [[1.5]], "B": [[1]], "C": [[-1]], "D": [[1]]},
          "filter": {"kind": "Step", "rotation": {"type": "plane", "theta": 0.7853981633974483}},
          "x0": [1.0], "steps": 200})");
  const Result r = run("simulate '" + p.string() + "' --out '" + scratch("d.csv").string() + "'");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("Diverged"), std::string::npos);
}

}  // namespace
