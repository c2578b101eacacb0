#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/diagnostics.hpp"
#include "dqnsdde/dqn_chain.hpp"
#include "dqnsdde/experiments.hpp"
#include "dqnsdde/sdde.hpp"

namespace dqnsdde {

/// Raised for unreadable, malformed or invalid configuration. `problems`
/// lists every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct NetworkSpec {
  std::vector<int> hidden{8};
  double bound_C = 10.0;
  double init_stddev = 0.5;
  std::uint64_t init_seed = 0;
  bool degenerate = false;  // Q and grad Q identically zero
};

struct GapSpec {
  std::vector<double> etas{0.05, 0.025, 0.0125};
  int n_mc = 20000;
  int n_points = 10;
  double probe_scale = 0.5;  // probes are theta0 + probe_scale N(0, I)
  nlohmann::json test_function = {{"kind", "quadratic"}, {"A", "identity"}};
};

enum class GateMode { Report, Theorem };

struct ExperimentConfig {
  std::uint64_t seed = 0;
  MdpSpec mdp;
  ReplayModel replay;
  NetworkSpec network;
  std::string theta0_kind = "init";  // init | zero | values
  std::vector<double> theta0_values;
  AlgoConfig algo;
  SddeConfig sdde;
  int n_traj = 1024;
  std::vector<long> checkpoints;  // empty: {0, T}
  int threads = 1;
  GateMode gate_mode = GateMode::Report;
  int gate_pairs = 64;
  double gate_radius = 1.0;
  double gate_safety = 2.0;
  int n_proj = 64;
  int assignment_cap = 512;
  std::vector<int> projected_coords{0, 1, 2, 3};
  RateSweepParams rate_sweep;
  VarianceStudyParams variance_study;
  MomentSuiteParams moment_suite;
  GapSpec generator_gap;

  QNetwork make_network() const;
  /// The idealized model; an online replay law falls back to uniform q.
  Model make_model() const;
  ParamVector theta0(const QNetwork& net) const;
  std::vector<long> resolved_checkpoints() const;

  /// Every field, defaults included, in the input schema.
  nlohmann::json to_json() const;
};

/// Parses and validates. `base_dir` resolves a relative "mdp_file".
/// Throws ConfigError. With `enforce_gate` false a theorem-mode gate
/// failure is left for the caller to report.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {},
                                  bool enforce_gate = true);

/// Reads a JSON file. Parse errors report line, column and the offending line.
nlohmann::json read_json_file(const std::filesystem::path& path);

ExperimentConfig load_config(const std::filesystem::path& path, bool enforce_gate = true);

/// Applies --seed and --threads overrides and spreads shared settings into
/// the per-study parameter blocks.
void apply_overrides(ExperimentConfig& cfg, const std::uint64_t* seed, const int* threads);

/// Stable FNV-1a hash of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& resolved);

}  // namespace dqnsdde
