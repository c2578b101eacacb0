#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace dqnsdde {

/// Flat parameter vector theta in R^d.
using ParamVector = Eigen::VectorXd;

struct MaxQ {
  double value = 0.0;
  int action = 0;
};

/// Sigmoid MLP over the concatenated one-hot encoding of (s, a) with an
/// output squash bound_C * (2 sigmoid(z) - 1), so |Q| < bound_C and Q is
/// smooth to all orders in theta.
///
/// Parameter layout: for each layer, the row-major weight matrix
/// (out x in) followed by the bias vector (out). The last layer has one
/// output and no activation before the squash.
class QNetwork {
 public:
  QNetwork(int n_states, int n_actions, std::vector<int> hidden, double bound_C);

  /// The network with output scale zero: Q and its gradient vanish
  /// identically. Used as the degenerate model in diagnostics.
  static QNetwork degenerate(int n_states, int n_actions, std::vector<int> hidden);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int input_dim() const { return n_states_ + n_actions_; }
  int param_count() const { return param_count_; }
  const std::vector<int>& hidden() const { return hidden_; }
  double bound() const { return bound_; }
  bool is_degenerate() const { return scale_ == 0.0; }

  double value(const ParamVector& theta, int s, int a) const;
  ParamVector grad(const ParamVector& theta, int s, int a) const;
  /// Value and exact reverse-mode gradient; `grad` must have size d.
  double value_and_grad(const ParamVector& theta, int s, int a, Eigen::Ref<Eigen::VectorXd> grad) const;
  /// Output-layer logit z, before the squash.
  double pre_squash(const ParamVector& theta, int s, int a) const;
  /// max over actions; ties go to the lowest action index.
  MaxQ max_q(const ParamVector& theta, int s) const;

  /// theta with i.i.d. N(0, stddev^2) entries.
  ParamVector init_params(double stddev, std::uint64_t seed) const;

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    int weight_offset = 0;
    int bias_offset = 0;
  };

  void check(const ParamVector& theta, int s, int a) const;
  double forward(const ParamVector& theta, int s, int a, std::vector<double>& act) const;

  int n_states_;
  int n_actions_;
  std::vector<int> hidden_;
  double bound_;
  double scale_;
  std::vector<Layer> layers_;
  int param_count_ = 0;
  int activation_count_ = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_s = 0;
  int worst_a = 0;
  std::uint64_t worst_seed = 0;
  int n_points = 0;

  bool within(double threshold) const { return max_rel_error < threshold; }
};

/// Worst analytic-vs-central-difference relative error over `n_points`
/// random (theta, s, a). Each point's theta is drawn from its own seed,
/// reported for the worst point so it can be replayed.
GradCheckReport grad_check(const QNetwork& net, int n_points, std::uint64_t seed,
                           double theta_stddev = 1.0, double fd_step = 1e-5);

}  // namespace dqnsdde
