#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
};

fs::path Scratch() {
  const fs::path dir = fs::path(::testing::TempDir()) / "cli";
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun Cli(const std::string& args) {
  const fs::path capture = Scratch() / "stdout.txt";
  const std::string cmd =
      std::string("\"") + SAFECERT_CLI + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(capture);
  return r;
}

double ValueAfter(const std::string& text, const std::string& label) {
  const auto pos = text.find(label);
  if (pos == std::string::npos) return NAN;
  return std::stod(text.substr(pos + label.size()));
}

std::string Bundled(const std::string& name) {
  return std::string(SAFECERT_SOURCE_DIR) + "/configs/" + name + ".json";
}

fs::path PatchedConfig(const std::string& name, const std::function<void(json&)>& patch) {
  json doc = json::parse(Slurp(Bundled("room")));
  patch(doc);
  const fs::path p = Scratch() / (name + ".json");
  std::ofstream(p) << doc.dump(2);
  return p;
}

TEST(Cli, MarginsRoom) {
  const CliRun r = Cli("margins --eta -16.928 --beta 0.02 --l1 25.51 --l2 14.8845 --theta 0.1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(ValueAfter(r.out, "m1 = "), -14.3770, 1e-3);
  EXPECT_NEAR(ValueAfter(r.out, "m2 = "), -15.4195, 1e-3);
}

TEST(Cli, MarginsVehicle) {
  const CliRun r = Cli("margins --eta -0.4098 --beta 0 --l1 7.8288 --l2 7.4875 --theta 0.05");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(ValueAfter(r.out, "m1 = "), -0.0184, 1e-3);
  EXPECT_NEAR(ValueAfter(r.out, "m2 = "), -0.0355, 1.5e-3);
}

TEST(Cli, MarginsViolated) {
  const CliRun r = Cli("margins --eta 0.1 --beta 0 --l1 0 --l2 0 --theta 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("violated"), std::string::npos);
}

TEST(Cli, SynthThenVerify) {
  const fs::path out = Scratch() / "room_out";
  fs::remove_all(out);
  const CliRun synth = Cli("synth " + Bundled("room") + " -o " + out.string());
  EXPECT_EQ(synth.code, 0) << synth.out;
  EXPECT_NE(synth.out.find("certified"), std::string::npos);
  ASSERT_TRUE(fs::exists(out / "certificate.json"));
  const CliRun verify = Cli("verify " + (out / "certificate.json").string() + " --refinement 4");
  EXPECT_EQ(verify.code, 0) << verify.out;
  EXPECT_NE(verify.out.find("verification passed"), std::string::npos);
  const CliRun lip = Cli("lipschitz --certificate " + (out / "certificate.json").string());
  EXPECT_EQ(lip.code, 0) << lip.out;
  EXPECT_GT(ValueAfter(lip.out, "L1 = "), 0.0);
}

TEST(Cli, SynthNotCertified) {
  const fs::path cfg = PatchedConfig("coarse", [](json& d) {
    d["classes"][0]["grid"] = {{"state", {3}}, {"input", {3}}};
  });
  const CliRun r = Cli("synth " + cfg.string() + " --no-refine --skip-verification -o " +
                    (Scratch() / "coarse_out").string());
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST(Cli, SynthInfeasible) {
  const fs::path cfg = PatchedConfig("infeasible", [](json& d) {
    d["scp"]["level_bound"] = 1;
    d["scp"]["gap"] = 10;
  });
  const CliRun r = Cli("synth " + cfg.string() + " --max-retries 0 --skip-verification -o " +
                    (Scratch() / "infeasible_out").string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("initial-level"), std::string::npos);
}

TEST(Cli, ConfigAndUsageErrors) {
  const fs::path overlap = PatchedConfig("overlap", [](json& d) {
    d["classes"][0]["initial_box"] = {{"lower", {10}}, {"upper", {12.5}}};
  });
  EXPECT_EQ(Cli("synth " + overlap.string()).code, 2);
  EXPECT_EQ(Cli("synth /nonexistent.json").code, 2);
  EXPECT_EQ(Cli("synth " + Bundled("room") + " --bogus").code, 2);
  EXPECT_EQ(Cli("").code, 2);
  EXPECT_EQ(Cli("margins --eta 1").code, 2);
  const fs::path truncated = Scratch() / "truncated.json";
  std::ofstream(truncated) << "{\"format\": \"safecert-certificate\"";
  EXPECT_EQ(Cli("verify " + truncated.string()).code, 2);
}

TEST(Cli, LipschitzLadder) {
  const CliRun r = Cli("lipschitz --function square --lower 0 --upper 1 --ladder");
  EXPECT_EQ(r.code, 0) << r.out;
  double previous = 0.0;
  size_t pos = 0;
  int rows = 0;
  while ((pos = r.out.find("L = ", pos)) != std::string::npos) {
    const double l = std::stod(r.out.substr(pos + 4));
    EXPECT_GE(l, previous);
    previous = l;
    pos += 4;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_NEAR(previous, 2.0, 0.1);
}

TEST(Cli, Simulate) {
  const fs::path csv = Scratch() / "traj.csv";
  const CliRun r = Cli("simulate " + Bundled("room") + " --topology cascade --trajectories 4 --steps 5 " +
                    "--output " + csv.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(Slurp(csv).substr(0, 25), "trajectory,step,subsystem");
}

}  // namespace
