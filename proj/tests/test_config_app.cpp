#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dqnsdde/app.hpp"
#include "dqnsdde/config.hpp"

using namespace dqnsdde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = DQNSDDE_SOURCE_DIR "/configs";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dqnsdde_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool any_contains(const std::vector<std::string>& v, const std::string& text) {
  for (const auto& s : v) {
    if (s.find(text) != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> problems_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

}  // namespace

TEST(Config, MinimalFilledAndEchoed) {
  const auto cfg = config_from_json(json::object());
  EXPECT_EQ(cfg.mdp.n_states, 3);
  EXPECT_EQ(cfg.algo.m, 5);
  const json echoed = cfg.to_json();
  const auto again = config_from_json(echoed);
  EXPECT_EQ(again.to_json(), echoed);
  EXPECT_EQ(config_hash(echoed), config_hash(again.to_json()));
}

TEST(Config, GammaRejected) {
  json j = {{"mdp", json::parse(slurp(kConfigs / "mdp_example.json"))}};
  j["mdp"]["gamma"] = 1.2;
  EXPECT_TRUE(any_contains(problems_of(j), "gamma must lie in (0,1)"));
}

TEST(Config, UnknownKeysAndTypes) {
  const auto p = problems_of({{"algo", {{"eta", "fast"}, {"etaa", 1}}}});
  EXPECT_TRUE(any_contains(p, "algo.eta"));
  EXPECT_TRUE(any_contains(p, "etaa"));
}

TEST(Config, TheoremGateNamesBindingConstraint) {
  const json j = {{"network", {{"hidden", {4}}}}, {"gate", {{"mode", "theorem"}}}};
  const auto p = problems_of(j);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NE(p[0].find("1/(64 L)"), std::string::npos) << p[0];
  EXPECT_NO_THROW(config_from_json(j, {}, false));
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"default.json", "smoke.json"}) {
    EXPECT_NO_THROW(load_config(kConfigs / name)) << name;
  }
}

TEST(Config, OverridesDeriveStudySeeds) {
  auto cfg = config_from_json(json::object());
  const std::uint64_t seed = 99;
  const int threads = 3;
  apply_overrides(cfg, &seed, &threads);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.rate_sweep.seed, derive_seed(99, "rate-sweep"));
  EXPECT_EQ(cfg.moment_suite.threads, 3);
}

TEST(Config, ParseErrorLocation) {
  const fs::path dir = scratch("bad_json");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\n  \"seed\": 1,\n  \"algo\": {\"eta\": }\n}\n";
  try {
    read_json_file(dir / "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(App, ValidateShippedMdp) {
  RunOptions o;
  o.mdp = kConfigs / "mdp_example.json";
  std::ostringstream out, err;
  EXPECT_EQ(run_subcommand("validate-mdp", o, out, err), kExitOk);
}

TEST(App, ValidateBadMdpExitsInvalid) {
  const fs::path dir = scratch("bad_mdp");
  fs::create_directories(dir);
  json m = json::parse(slurp(kConfigs / "mdp_example.json"));
  m["V"][1][0] = -0.1;
  std::ofstream(dir / "mdp.json") << m.dump();
  RunOptions o;
  o.mdp = dir / "mdp.json";
  o.out = dir / "out";
  std::ostringstream out, err;
  EXPECT_EQ(run_subcommand("validate-mdp", o, out, err), kExitInvalid);
  const json v = json::parse(slurp(dir / "out" / "validation.json"));
  EXPECT_FALSE(v["valid"].get<bool>());
}

TEST(App, UnwritableOutLeavesNothing) {
  const fs::path dir = scratch("unwritable");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  RunOptions o;
  o.config = kConfigs / "smoke.json";
  o.out = dir / "file" / "run";
  std::ostringstream out, err;
  EXPECT_NE(run_subcommand("simulate-dqn", o, out, err), kExitOk);
  EXPECT_FALSE(fs::exists(o.out));
  EXPECT_NE(err.str().find("\"error\""), std::string::npos);
}

TEST(App, ManifestAndRerunByteIdentical) {
  const fs::path dir = scratch("rerun");
  RunOptions o;
  o.config = kConfigs / "smoke.json";
  o.out = dir / "a";
  std::ostringstream out, err;
  ASSERT_EQ(run_subcommand("simulate-sdde", o, out, err), kExitOk) << err.str();
  const json man = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(man["status"], "ok");
  EXPECT_EQ(man["subcommand"], "simulate-sdde");
  for (const char* key : {"config_hash", "master_seed", "version", "started_at", "finished_at",
                          "assumption_report", "outputs", "config"}) {
    EXPECT_TRUE(man.contains(key)) << key;
  }
  ASSERT_EQ(rerun_from_manifest(dir / "a" / "manifest.json", dir / "b", out, err), kExitOk) << err.str();
  EXPECT_EQ(slurp(dir / "a" / "trajectories.csv"), slurp(dir / "b" / "trajectories.csv"));
  const json man_b = json::parse(slurp(dir / "b" / "manifest.json"));
  EXPECT_EQ(man_b["config_hash"], man["config_hash"]);
}

TEST(App, SeedOverrideChangesOutput) {
  const fs::path dir = scratch("seed");
  RunOptions o;
  o.config = kConfigs / "smoke.json";
  o.out = dir / "a";
  std::ostringstream out, err;
  ASSERT_EQ(run_subcommand("simulate-dqn", o, out, err), kExitOk);
  o.out = dir / "b";
  o.seed = 12345;
  ASSERT_EQ(run_subcommand("simulate-dqn", o, out, err), kExitOk);
  EXPECT_NE(slurp(dir / "a" / "trajectories.csv"), slurp(dir / "b" / "trajectories.csv"));
}

TEST(App, UnknownSubcommandAndMissingConfig) {
  RunOptions o;
  o.out = scratch("usage");
  std::ostringstream out, err;
  EXPECT_EQ(run_subcommand("frobnicate", o, out, err), kExitUsage);
  EXPECT_EQ(run_subcommand("simulate-dqn", o, out, err), kExitUsage);
}

TEST(App, RateSweepGateErrorRecorded) {
  const fs::path dir = scratch("gate");
  RunOptions o;
  o.config = kConfigs / "smoke.json";
  o.out = dir;
  std::ostringstream out, err;
  EXPECT_EQ(run_subcommand("rate-sweep", o, out, err), kExitRuntimeError);
  const json man = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(man["status"], "error");
  EXPECT_FALSE(fs::exists(dir / "rate_sweep.csv"));
}
