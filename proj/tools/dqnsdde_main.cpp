#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dqnsdde/app.hpp"

int main(int argc, char** argv) {
  using namespace dqnsdde;

  CLI::App app{"Simulate noisy DQN chains and their delay-diffusion limit"};
  app.set_version_flag("--version", DQNSDDE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  RunOptions opt;
  std::uint64_t seed = 0;
  int threads = 1;
  long checkpoint = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the master seed");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", opt.config, "Experiment configuration (JSON)");
  app.add_option("--out", opt.out, "Output directory");
  app.add_flag("--force", opt.force, "Run even when the step-size gate fails");

  auto* validate = app.add_subcommand("validate-mdp", "Check an MDP file");
  validate->add_option("mdp", opt.mdp, "MDP JSON file (defaults to the config's MDP)");

  app.add_subcommand("simulate-dqn", "Simulate the DQN chain");
  app.add_subcommand("simulate-sdde", "Simulate the delay SDE");
  auto* dump = app.add_subcommand("dump-coefficients", "Write b, Sigma, beta_bar and sigma");
  dump->add_option("--points", opt.points, "JSON with x and y (defaults to theta0)");

  auto* w1 = app.add_subcommand("estimate-w1", "W1 distance between two trajectory files");
  w1->add_option("--a", opt.a, "First trajectory CSV")->required();
  w1->add_option("--b", opt.b, "Second trajectory CSV")->required();
  auto* checkpoint_opt = w1->add_option("--checkpoint", checkpoint, "Step to compare (default: last)");
  w1->add_option("--method", opt.method, "sliced, assignment or both")
      ->check(CLI::IsMember({"sliced", "assignment", "both"}));

  auto* gap = app.add_subcommand("generator-gap", "One-step generator gap at probe points");
  gap->add_option("--points", opt.points, "Probe points JSON (default: random around theta0)");

  app.add_subcommand("check-assumptions", "Estimate constants and the step-size gate");
  app.add_subcommand("rate-sweep", "W1 between chain and SDDE across step sizes");
  app.add_subcommand("variance-study", "Stationary variance against the delay window");
  app.add_subcommand("moment-suite", "Second-moment and displacement bounds");

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun->add_option("--manifest", manifest, "manifest.json of the earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count()) opt.seed = seed;
  if (threads_opt->count()) opt.threads = threads;
  if (checkpoint_opt->count()) opt.checkpoint = checkpoint;

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "rerun") {
    if (opt.out.empty()) {
      std::cerr << "{\"error\":{\"message\":\"--out is required\",\"type\":\"usage\"}}\n";
      return kExitUsage;
    }
    return rerun_from_manifest(manifest, opt.out, std::cout, std::cerr);
  }
  return run_subcommand(name, opt, std::cout, std::cerr);
}
