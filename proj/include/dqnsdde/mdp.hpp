#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqnsdde/random.hpp"

namespace dqnsdde {

/// Finite MDP with Gaussian rewards r(s,a) ~ N(R(s,a), V(s,a)^2).
/// States and actions are index sets {0..n-1}.
struct MdpSpec {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> p;  // p(s'|s,a) at (s * n_actions + a) * n_states + s'
  std::vector<double> R;  // at s * n_actions + a
  std::vector<double> V;
  double gamma = 0.9;

  std::size_t pair_index(int s, int a) const {
    return static_cast<std::size_t>(s) * n_actions + a;
  }
  double prob(int s, int a, int s_next) const {
    return p[pair_index(s, a) * n_states + s_next];
  }
  double reward_mean(int s, int a) const { return R[pair_index(s, a)]; }
  double reward_std(int s, int a) const { return V[pair_index(s, a)]; }
  std::size_t n_pairs() const { return static_cast<std::size_t>(n_states) * n_actions; }
};

struct ValidationReport {
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  std::string to_string() const;
};

ValidationReport validate_mdp(const MdpSpec& spec);

struct ReplayModel {
  enum class Mode { Idealized, OnlineBuffer };

  Mode mode = Mode::Idealized;
  std::vector<double> q;  // Idealized: |S|x|A| sampling law of (s,a)
  std::size_t capacity = 0;  // OnlineBuffer
  double epsilon = 0.1;      // OnlineBuffer

  static ReplayModel idealized(std::vector<double> q);
  static ReplayModel uniform(const MdpSpec& spec);
  static ReplayModel online(std::size_t capacity, double epsilon);
};

ValidationReport validate_replay(const MdpSpec& spec, const ReplayModel& replay);

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

/// One (s, a, s') triple of the idealized sampling law with its probability.
struct SupportPoint {
  int s = 0;
  int a = 0;
  int s_next = 0;
  double weight = 0.0;
};

/// Draws (s,a) ~ q, s' ~ p(.|s,a), r ~ N(R, V^2), in that order, from `rng`.
/// Throws std::invalid_argument for a non-idealized replay model.
Transition sample_transition(const MdpSpec& spec, const ReplayModel& replay, Rng& rng);

/// All triples with weight q(s,a) p(s'|s,a) > 0, in (s, a, s') index order.
std::vector<SupportPoint> enumerate_support(const MdpSpec& spec, const std::vector<double>& q);

/// Environment step: s' ~ p(.|s,a), r ~ N(R, V^2).
Transition step_environment(const MdpSpec& spec, int s, int a, Rng& rng);

/// FIFO replay memory: the oldest transition is evicted when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void store(const Transition& t);
  /// Uniform draw; throws std::logic_error when empty.
  const Transition& sample(Rng& rng) const;
  const Transition& latest() const { return items_.back(); }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

/// Parses {"states", "actions", "p", "R", "V", "gamma"}. Shape errors throw
/// std::invalid_argument; value checks are left to validate_mdp.
MdpSpec mdp_from_json(const nlohmann::json& j);
nlohmann::json mdp_to_json(const MdpSpec& spec);

/// Parses {"mode": "idealized"|"online", "q", "capacity", "epsilon"}.
/// A missing q defaults to uniform over all pairs.
ReplayModel replay_from_json(const nlohmann::json& j, const MdpSpec& spec);
nlohmann::json replay_to_json(const ReplayModel& replay, const MdpSpec& spec);

}  // namespace dqnsdde
