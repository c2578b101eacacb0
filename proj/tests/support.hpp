#pragma once

#include <vector>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/mdp.hpp"
#include "dqnsdde/qnetwork.hpp"

namespace dqnsdde::testing {

// The 3-state, 2-action MDP shipped in configs/mdp_example.json.
inline MdpSpec example_mdp() {
  MdpSpec m;
  m.n_states = 3;
  m.n_actions = 2;
  m.p = {0.7, 0.2, 0.1, 0.1, 0.6, 0.3, 0.3, 0.4, 0.3, 0.2, 0.2, 0.6, 0.5, 0.0, 0.5, 0.1, 0.1, 0.8};
  m.R = {1.0, 0.0, -0.5, 0.5, 0.2, -1.0};
  m.V = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  m.gamma = 0.9;
  return m;
}

inline std::vector<double> uniform_q(const MdpSpec& m) {
  return std::vector<double>(m.n_pairs(), 1.0 / static_cast<double>(m.n_pairs()));
}

inline Model example_model(std::vector<int> hidden = {4}, double bound = 10.0) {
  MdpSpec m = example_mdp();
  QNetwork net(m.n_states, m.n_actions, std::move(hidden), bound);
  return Model(m, net, uniform_q(m));
}

inline Model degenerate_model(std::vector<int> hidden = {3}) {
  MdpSpec m = example_mdp();
  return Model(m, QNetwork::degenerate(m.n_states, m.n_actions, std::move(hidden)), uniform_q(m));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace dqnsdde::testing
