#include "dqnsdde/dqn_chain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dqnsdde {

void validate_algo_config(const AlgoConfig& cfg) {
  std::string errors;
  auto add = [&](const std::string& e) { errors += (errors.empty() ? "" : "; ") + e; };
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) add("eta must be positive");
  if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta)) add("delta must be positive");
  if (cfg.m < 1) add("m must be >= 1");
  if (cfg.T < 1) add("T must be >= 1");
  if (cfg.H != 1) add("only minibatch size H = 1 is supported");
  if (!errors.empty()) throw std::invalid_argument(errors);
}

namespace {

void require_finite(const ParamVector& theta) {
  if (!theta.allFinite()) throw std::runtime_error("non-finite parameter after step");
}

}  // namespace

ParamVector dqn_step_given(const Model& model, const ParamVector& theta, const TargetValues& target,
                           const AlgoConfig& cfg, const Transition& t, const Eigen::VectorXd& W) {
  const auto& mdp = model.mdp();
  const int d = model.dim();
  ParamVector g(d);
  const double qx = model.net().value_and_grad(theta, t.s, t.a, g);
  const double R = mdp.reward_mean(t.s, t.a);
  const double V = mdp.reward_std(t.s, t.a);
  const double td = R + mdp.gamma * target.next_max[t.s_next] - qx;

  // theta - eta b_n, with b_n = -td grad Q.
  ParamVector next = theta + (cfg.eta * td) * g;
  const double noise = std::sqrt(cfg.eta * cfg.delta);
  if (cfg.reward_noise == RewardNoise::Diagonal) {
    next.array() += (cfg.eta * V * g.array() + noise) * W.array();
  } else {
    next += (cfg.eta * (t.r - R)) * g;
    next += noise * W;
  }
  require_finite(next);
  return next;
}

ParamVector dqn_step(const Model& model, const ParamVector& theta, const TargetValues& target,
                     const AlgoConfig& cfg, Rng& rng) {
  const Transition t = sample_transition(model.mdp(), model.replay(), rng);
  Eigen::VectorXd W(model.dim());
  for (Eigen::Index k = 0; k < W.size(); ++k) W[k] = rng.normal();
  return dqn_step_given(model, theta, target, cfg, t, W);
}

ParamVector dqn_step(const Model& model, const ParamVector& theta, const ParamVector& theta_target,
                     const AlgoConfig& cfg, Rng& rng) {
  return dqn_step(model, theta, target_values(model, theta_target), cfg, rng);
}

ParamVector dqn_step_sampled_reward(const Model& model, const ParamVector& theta,
                                    const TargetValues& target, const AlgoConfig& cfg, Rng& rng) {
  const auto& mdp = model.mdp();
  const int d = model.dim();
  const Transition t = sample_transition(mdp, model.replay(), rng);
  ParamVector g(d);
  const double qx = model.net().value_and_grad(theta, t.s, t.a, g);
  const double td = t.r + mdp.gamma * target.next_max[t.s_next] - qx;
  ParamVector next = theta + (cfg.eta * td) * g;
  const double noise = std::sqrt(cfg.eta * cfg.delta);
  for (int k = 0; k < d; ++k) next[k] += noise * rng.normal();
  require_finite(next);
  return next;
}

TrajectoryEnsemble run_dqn(const Model& model, const ParamVector& theta0, const AlgoConfig& cfg,
                           int n_traj, const std::vector<long>& checkpoints) {
  validate_algo_config(cfg);
  validate_checkpoints(checkpoints, cfg.T);
  if (theta0.size() != model.dim()) throw std::invalid_argument("theta0 has wrong dimension");
  TrajectoryEnsemble ens(checkpoints, n_traj, model.dim());

  parallel_for(n_traj, cfg.threads, [&](int i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    ParamVector theta = theta0;
    TargetValues target;
    std::size_t next_ck = 0;
    for (long n = 0;; ++n) {
      if (next_ck < checkpoints.size() && checkpoints[next_ck] == n) {
        ens.at(i, next_ck) = theta;
        ++next_ck;
      }
      if (n == cfg.T || next_ck == checkpoints.size()) break;
      if (n % cfg.m == 0) target = target_values(model, theta);
      try {
        theta = dqn_step(model, theta, target, cfg, rng);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " (trajectory " + std::to_string(i) +
                                 ", step " + std::to_string(n) + ")");
      }
    }
  });
  ens.meta = {{"kind", "dqn"},
              {"eta", cfg.eta},
              {"delta", cfg.delta},
              {"m", cfg.m},
              {"T", cfg.T},
              {"seed", cfg.seed},
              {"reward_noise", cfg.reward_noise == RewardNoise::Diagonal ? "diagonal" : "rank_one"}};
  return ens;
}

OnlineDqnRun::OnlineDqnRun(const MdpSpec& mdp, const QNetwork& net, const ReplayModel& replay,
                           const AlgoConfig& cfg, ParamVector theta0, std::uint64_t seed)
    : mdp_(mdp), net_(net), cfg_(cfg), epsilon_(replay.epsilon), rng_(seed),
      buffer_(replay.capacity), theta_(std::move(theta0)), target_(theta_),
      grad_(net.param_count()) {
  if (replay.mode != ReplayModel::Mode::OnlineBuffer) {
    throw std::invalid_argument("Algorithm 1 needs an online replay buffer");
  }
  state_ = static_cast<int>(rng_.below(mdp_.n_states));
}

OnlineDqnRun::StepInfo OnlineDqnRun::step() {
  StepInfo info;
  int action;
  if (rng_.bernoulli(epsilon_)) {
    action = static_cast<int>(rng_.below(mdp_.n_actions));
  } else {
    action = net_.max_q(theta_, state_).action;
  }
  info.stored = step_environment(mdp_, state_, action, rng_);
  buffer_.store(info.stored);
  info.sampled = buffer_.sample(rng_);

  const auto& tr = info.sampled;
  const double y = tr.r + mdp_.gamma * net_.max_q(target_, tr.s_next).value;
  const double qx = net_.value_and_grad(theta_, tr.s, tr.a, grad_);
  theta_ += (cfg_.eta * (y - qx)) * grad_;
  const double noise = std::sqrt(cfg_.eta * cfg_.delta);
  for (Eigen::Index k = 0; k < theta_.size(); ++k) theta_[k] += noise * rng_.normal();
  require_finite(theta_);

  state_ = info.stored.s_next;
  ++t_;
  if (t_ % cfg_.m == 0) target_ = theta_;
  return info;
}

TrajectoryEnsemble run_algorithm1(const MdpSpec& mdp, const QNetwork& net, const ReplayModel& replay,
                                  const AlgoConfig& cfg, const ParamVector& theta0, int n_traj,
                                  const std::vector<long>& checkpoints, Algorithm1Stats* stats) {
  validate_algo_config(cfg);
  validate_checkpoints(checkpoints, cfg.T);
  const auto report = validate_replay(mdp, replay);
  if (!report.ok()) throw std::invalid_argument(report.to_string());
  TrajectoryEnsemble ens(checkpoints, n_traj, net.param_count());
  std::vector<std::vector<long>> counts(n_traj, std::vector<long>(mdp.n_actions, 0));

  parallel_for(n_traj, cfg.threads, [&](int i) {
    OnlineDqnRun run(mdp, net, replay, cfg, theta0, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    std::size_t next_ck = 0;
    while (true) {
      if (next_ck < checkpoints.size() && checkpoints[next_ck] == run.t()) {
        ens.at(i, next_ck) = run.theta();
        ++next_ck;
      }
      if (run.t() == cfg.T || next_ck == checkpoints.size()) break;
      const auto info = run.step();
      ++counts[i][info.stored.a];
    }
  });
  if (stats) {
    stats->action_counts.assign(mdp.n_actions, 0);
    for (const auto& c : counts) {
      for (int a = 0; a < mdp.n_actions; ++a) stats->action_counts[a] += c[a];
    }
  }
  ens.meta = {{"kind", "algorithm1"}, {"eta", cfg.eta}, {"delta", cfg.delta}, {"m", cfg.m},
              {"T", cfg.T},           {"seed", cfg.seed},
              {"capacity", replay.capacity}, {"epsilon", replay.epsilon}};
  return ens;
}

MomentReport moment_check_theta(const TrajectoryEnsemble& ensemble, const ParamVector& x) {
  if (ensemble.n_traj() < 1) throw std::invalid_argument("empty ensemble");
  MomentReport report;
  report.order = 4;
  report.steps = ensemble.checkpoints();
  const double x4 = std::pow(x.squaredNorm(), 2);
  // theta_0 = x deterministically, so E|theta_0|^4 = |x|^4.
  report.initial_term = 1.0 + x4 + x4;
  for (std::size_t c = 0; c < report.steps.size(); ++c) {
    double acc = 0.0;
    for (int i = 0; i < ensemble.n_traj(); ++i) acc += std::pow(ensemble.at(i, c).squaredNorm(), 2);
    const double m4 = acc / ensemble.n_traj();
    report.moments.push_back(m4);
    report.finite = report.finite && std::isfinite(m4);
    report.fitted_constant = std::max(report.fitted_constant, m4 / report.initial_term);
  }
  return report;
}

}  // namespace dqnsdde
