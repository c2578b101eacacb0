#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dqnsdde/mdp.hpp"
#include "dqnsdde/qnetwork.hpp"

namespace dqnsdde {

/// An MDP, a Q-network over it and an idealized (i.i.d.) replay law q.
/// Immutable after construction and safe to share across threads.
class Model {
 public:
  /// Throws std::invalid_argument when the MDP or q fails validation or the
  /// network shape does not match the MDP.
  Model(MdpSpec mdp, QNetwork net, std::vector<double> q);

  const MdpSpec& mdp() const { return mdp_; }
  const QNetwork& net() const { return net_; }
  const std::vector<double>& q() const { return q_; }
  const std::vector<SupportPoint>& support() const { return support_; }
  /// Pair indices s * |A| + a with q(s,a) > 0, ascending.
  const std::vector<int>& active_pairs() const { return active_pairs_; }
  int dim() const { return net_.param_count(); }
  const ReplayModel& replay() const { return replay_; }

 private:
  MdpSpec mdp_;
  QNetwork net_;
  std::vector<double> q_;
  std::vector<SupportPoint> support_;
  std::vector<int> active_pairs_;
  ReplayModel replay_;
};

/// Quantities of the frozen (target) parameter y shared by every drift
/// evaluation within a target window.
struct TargetValues {
  ParamVector y;
  std::vector<double> next_max;  // max_a' Q(s', a'; y) per state
  std::vector<double> qbar;      // Q̄(s, a; y) per pair
};

TargetValues target_values(const Model& model, const ParamVector& y);

/// Q̄(s,a;y) = sum_s' p(s'|s,a) max_a' Q(s',a';y).
double qbar(const QNetwork& net, const MdpSpec& mdp, const ParamVector& y, int s, int a);

/// b_n(x, y) = -[R(s,a) + gamma max_a' Q(s',a';y) - Q(s,a;x)] grad Q(s,a;x).
/// Uses the mean reward; the reward noise is carried separately.
Eigen::VectorXd sample_drift_bn(const QNetwork& net, const MdpSpec& mdp, const ParamVector& x,
                                const ParamVector& y, const Transition& t);

/// b(x, y) = -E_{(s,a)~q}[(R + gamma Q̄(y) - Q(x)) grad Q(x)], summed exactly.
Eigen::VectorXd exact_drift_b(const Model& model, const ParamVector& x, const ParamVector& y);

/// Drift and a factor of the state-dependent covariance at (x, y).
///
/// `sampling_factor` has one column sqrt(w_k) (b_n,k - b) per support triple,
/// so its Gram matrix is Sigma(x, y). `reward_factor` has one column
/// sqrt(q(s,a)) V(s,a) grad Q(s,a;x) per active pair, so its Gram matrix is
/// beta_bar(x).
struct LocalCoefficients {
  Eigen::VectorXd b;
  Eigen::MatrixXd sampling_factor;
  Eigen::MatrixXd reward_factor;
};

LocalCoefficients local_coefficients(const Model& model, const ParamVector& x,
                                     const TargetValues& target);

struct CoefficientSet {
  Eigen::VectorXd b;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd beta_bar;
  Eigen::MatrixXd sigma;        // symmetric PSD root of Sigma + beta_bar + (delta/eta) I
  Eigen::VectorXd eigenvalues;  // of sigma^2, ascending
  double eta = 0.0;
  double delta = 0.0;

  Eigen::MatrixXd sigma_squared() const;
};

/// Symmetric square root by eigendecomposition. Eigenvalues in
/// [-1e-10, 0) are clipped to zero; anything lower throws
/// std::runtime_error. `eigenvalues`, when given, receives the spectrum.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, Eigen::VectorXd* eigenvalues = nullptr);

/// Sigma and beta_bar by enumeration, sigma = [Sigma + beta_bar + (delta/eta) I]^{1/2}.
CoefficientSet sigma_matrix(const Model& model, const ParamVector& x, const ParamVector& y,
                            double eta, double delta);

struct AssumptionEstimates {
  double L_hat = 0.0;         // drift Lipschitz constant in |dx| + |dy|
  double K_hat = 0.0;         // max |b_n(x,y)| / (1 + |x - y|)
  double beta_max_hat = 0.0;  // max ||beta_bar(x)||_HS
  double b00_norm = 0.0;      // |b(0, 0)|
  int n_pairs = 0;
  double radius = 0.0;
};

/// Probes n_pairs points (x, y) with |x|, |y| uniform in [0, radius] along
/// random directions. L_hat takes the larger of finite pair ratios and the
/// finite-difference Jacobian norms at the probes. Probe i depends only on
/// (seed, i), so a larger n_pairs probes a superset.
AssumptionEstimates estimate_constants(const Model& model, int n_pairs, double radius,
                                       std::uint64_t seed);

}  // namespace dqnsdde
