#pragma once

#include <cstdint>
#include <vector>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/ensemble.hpp"
#include "dqnsdde/random.hpp"

namespace dqnsdde {

/// How the Gaussian reward noise enters the noisy iteration.
///
/// Diagonal: the literal (eta beta_n + sqrt(eta delta) I) W with
/// beta_n = diag(V grad Q) acting on the same d-dimensional W.
/// RankOne: eta (r - R) grad Q with the sampled reward, which is pathwise
/// the raw sampled-reward update and has increment covariance
/// eta^2 Sigma + eta^2 beta_bar + eta delta I.
enum class RewardNoise { Diagonal, RankOne };

struct AlgoConfig {
  double eta = 0.01;
  double delta = 0.5;
  long m = 1;  // target update period
  long T = 1;  // total steps
  std::uint64_t seed = 0;
  int H = 1;   // minibatch size; only 1 is supported
  RewardNoise reward_noise = RewardNoise::Diagonal;
  int threads = 1;
};

/// Throws std::invalid_argument listing every violated constraint.
void validate_algo_config(const AlgoConfig& cfg);

/// One step from theta with the target frozen at target.y. Draw order:
/// transition (pair, successor, reward), then W in R^d.
/// Throws std::runtime_error on a non-finite result.
ParamVector dqn_step(const Model& model, const ParamVector& theta, const TargetValues& target,
                     const AlgoConfig& cfg, Rng& rng);
ParamVector dqn_step(const Model& model, const ParamVector& theta, const ParamVector& theta_target,
                     const AlgoConfig& cfg, Rng& rng);

/// The same update with the transition and W supplied by the caller.
ParamVector dqn_step_given(const Model& model, const ParamVector& theta, const TargetValues& target,
                           const AlgoConfig& cfg, const Transition& t, const Eigen::VectorXd& W);

/// The raw update with the sampled reward r_i in the TD target and only the
/// injected sqrt(eta delta) W noise. Consumes the stream exactly like
/// dqn_step, so both can be driven by identical draws.
ParamVector dqn_step_sampled_reward(const Model& model, const ParamVector& theta,
                                    const TargetValues& target, const AlgoConfig& cfg, Rng& rng);

/// n_traj independent chains from theta0; trajectory i uses stream
/// derive_seed(cfg.seed, i). The target is theta_{floor(n/m) m}.
TrajectoryEnsemble run_dqn(const Model& model, const ParamVector& theta0, const AlgoConfig& cfg,
                           int n_traj, const std::vector<long>& checkpoints);

/// A single trajectory of deep Q-learning with an online FIFO replay
/// buffer, epsilon-greedy exploration and the injected sqrt(eta delta) W.
class OnlineDqnRun {
 public:
  struct StepInfo {
    Transition stored;
    Transition sampled;
  };

  OnlineDqnRun(const MdpSpec& mdp, const QNetwork& net, const ReplayModel& replay,
               const AlgoConfig& cfg, ParamVector theta0, std::uint64_t seed);

  StepInfo step();

  const ParamVector& theta() const { return theta_; }
  const ParamVector& target() const { return target_; }
  long t() const { return t_; }
  int state() const { return state_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  const MdpSpec& mdp_;
  const QNetwork& net_;
  AlgoConfig cfg_;
  double epsilon_;
  Rng rng_;
  ReplayBuffer buffer_;
  ParamVector theta_;
  ParamVector target_;
  ParamVector grad_;
  long t_ = 0;
  int state_ = 0;
};

struct Algorithm1Stats {
  std::vector<long> action_counts;
};

TrajectoryEnsemble run_algorithm1(const MdpSpec& mdp, const QNetwork& net, const ReplayModel& replay,
                                  const AlgoConfig& cfg, const ParamVector& theta0, int n_traj,
                                  const std::vector<long>& checkpoints,
                                  Algorithm1Stats* stats = nullptr);

/// Empirical E|Z_k|^p per checkpoint against the initial-condition scale
/// 1 + |x|^p + E|theta_0|^p (+ extra).
struct MomentReport {
  int order = 0;
  std::vector<long> steps;
  std::vector<double> moments;
  double initial_term = 0.0;
  double fitted_constant = 0.0;  // max over checkpoints of moment / initial_term
  bool finite = true;
};

/// Fourth moments of a chain ensemble started at the deterministic x.
MomentReport moment_check_theta(const TrajectoryEnsemble& ensemble, const ParamVector& x);

}  // namespace dqnsdde
