#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace dqnsdde {

/// Row-major sample matrix: one row per draw.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N independent trajectories recorded at a fixed list of checkpoint steps.
/// Only the requested slices are stored (N x |checkpoints| x d).
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble() = default;
  TrajectoryEnsemble(std::vector<long> checkpoints, int n_traj, int dim);

  const std::vector<long>& checkpoints() const { return checkpoints_; }
  int n_traj() const { return n_traj_; }
  int dim() const { return dim_; }

  Eigen::Map<Eigen::VectorXd> at(int traj, std::size_t checkpoint);
  Eigen::Map<const Eigen::VectorXd> at(int traj, std::size_t checkpoint) const;

  /// Position of `step` in checkpoints(); throws std::out_of_range if absent.
  std::size_t checkpoint_index(long step) const;
  /// All trajectories at one checkpoint, one row each.
  SampleMatrix slice(std::size_t checkpoint) const;

  nlohmann::json meta;

  /// CSV rows: traj_id, step, theta_0..theta_{d-1}, trajectory-major.
  void write_csv(std::ostream& os) const;
  static TrajectoryEnsemble read_csv(std::istream& is);

 private:
  std::vector<long> checkpoints_;
  int n_traj_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

/// Rows of an ensemble CSV with the given step, ordered by trajectory id.
SampleMatrix read_checkpoint_csv(std::istream& is, long step);

/// Checks that checkpoint steps are strictly increasing and within [0, last].
void validate_checkpoints(const std::vector<long>& checkpoints, long last);

/// Runs body(i) for i in [0, n) on up to `threads` workers with static
/// interleaved assignment. Exceptions are rethrown on the caller.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

/// Formats a double so it round-trips exactly.
std::string format_double(double v);

}  // namespace dqnsdde
