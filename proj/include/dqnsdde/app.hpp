#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dqnsdde {

/// Exit statuses of run_subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntimeError = 1,  // a module failed while running
  kExitUsage = 2,         // bad arguments, configuration or output directory
  kExitInvalid = 3,       // validate-mdp found problems
};

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool force = false;
  // estimate-w1
  std::filesystem::path a;
  std::filesystem::path b;
  std::optional<long> checkpoint;
  std::string method = "both";
  // generator-gap
  std::filesystem::path points;
  // validate-mdp
  std::filesystem::path mdp;

  nlohmann::json to_json() const;
  static RunOptions from_json(const nlohmann::json& j);
};

const std::vector<std::string>& subcommand_names();

/// Runs one subcommand. The manifest (manifest.json in options.out) is
/// written before any work starts and rewritten at the end with the status,
/// timestamps and output list. Outputs are buffered and written
/// temp-then-rename only after the whole computation succeeded.
int run_subcommand(const std::string& name, const RunOptions& options, std::ostream& out,
                   std::ostream& err);

/// Re-runs the subcommand recorded in a manifest into `out_dir` using the
/// embedded resolved configuration and arguments.
int rerun_from_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                        std::ostream& out, std::ostream& err);

/// Writes `content` to `path` through a temporary file in the same
/// directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace dqnsdde
