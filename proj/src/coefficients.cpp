#include "dqnsdde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dqnsdde/random.hpp"

namespace dqnsdde {

Model::Model(MdpSpec mdp, QNetwork net, std::vector<double> q)
    : mdp_(std::move(mdp)), net_(std::move(net)), q_(std::move(q)) {
  const auto mdp_report = validate_mdp(mdp_);
  if (!mdp_report.ok()) throw std::invalid_argument("invalid MDP: " + mdp_report.to_string());
  const auto q_report = validate_replay(mdp_, ReplayModel::idealized(q_));
  if (!q_report.ok()) throw std::invalid_argument("invalid replay law: " + q_report.to_string());
  if (net_.n_states() != mdp_.n_states || net_.n_actions() != mdp_.n_actions) {
    throw std::invalid_argument("network encoding does not match the MDP's state/action counts");
  }
  support_ = enumerate_support(mdp_, q_);
  replay_ = ReplayModel::idealized(q_);
  for (std::size_t i = 0; i < q_.size(); ++i) {
    if (q_[i] > 0.0) active_pairs_.push_back(static_cast<int>(i));
  }
}

TargetValues target_values(const Model& model, const ParamVector& y) {
  const auto& mdp = model.mdp();
  TargetValues tv;
  tv.y = y;
  tv.next_max.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) tv.next_max[s] = model.net().max_q(y, s).value;
  tv.qbar.assign(mdp.n_pairs(), 0.0);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double acc = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) acc += mdp.prob(s, a, s2) * tv.next_max[s2];
      tv.qbar[mdp.pair_index(s, a)] = acc;
    }
  }
  return tv;
}

double qbar(const QNetwork& net, const MdpSpec& mdp, const ParamVector& y, int s, int a) {
  double acc = 0.0;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    const double p = mdp.prob(s, a, s2);
    if (p > 0.0) acc += p * net.max_q(y, s2).value;
  }
  return acc;
}

Eigen::VectorXd sample_drift_bn(const QNetwork& net, const MdpSpec& mdp, const ParamVector& x,
                                const ParamVector& y, const Transition& t) {
  Eigen::VectorXd g(net.param_count());
  const double qx = net.value_and_grad(x, t.s, t.a, g);
  const double td = mdp.reward_mean(t.s, t.a) + mdp.gamma * net.max_q(y, t.s_next).value - qx;
  return -td * g;
}

LocalCoefficients local_coefficients(const Model& model, const ParamVector& x,
                                     const TargetValues& target) {
  const auto& mdp = model.mdp();
  const auto& net = model.net();
  const auto& pairs = model.active_pairs();
  const auto& support = model.support();
  const int d = model.dim();

  // Per active pair: Q(s,a;x) and grad Q(s,a;x).
  Eigen::MatrixXd grads(d, static_cast<Eigen::Index>(pairs.size()));
  std::vector<double> qx(pairs.size());
  std::vector<int> column_of(mdp.n_pairs(), -1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int pair = pairs[k];
    qx[k] = net.value_and_grad(x, pair / mdp.n_actions, pair % mdp.n_actions, grads.col(k));
    column_of[pair] = static_cast<int>(k);
  }

  LocalCoefficients out;
  out.b = Eigen::VectorXd::Zero(d);
  out.reward_factor.resize(d, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const int pair = pairs[k];
    const double w = model.q()[pair];
    const double td = mdp.R[pair] + mdp.gamma * target.qbar[pair] - qx[k];
    out.b.noalias() -= (w * td) * grads.col(k);
    out.reward_factor.col(k) = (std::sqrt(w) * mdp.V[pair]) * grads.col(k);
  }

  // Centered second moment of b_n over the support: the columns carry
  // sqrt(w) (b_n - b), so the Gram matrix is PSD by construction.
  out.sampling_factor.resize(d, static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto& sp = support[k];
    const int pair = static_cast<int>(mdp.pair_index(sp.s, sp.a));
    const int col = column_of[pair];
    const double td = mdp.R[pair] + mdp.gamma * target.next_max[sp.s_next] - qx[col];
    out.sampling_factor.col(k) = std::sqrt(sp.weight) * (-td * grads.col(col) - out.b);
  }
  return out;
}

Eigen::VectorXd exact_drift_b(const Model& model, const ParamVector& x, const ParamVector& y) {
  return local_coefficients(model, x, target_values(model, y)).b;
}

Eigen::MatrixXd CoefficientSet::sigma_squared() const { return sigma * sigma.transpose(); }

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, Eigen::VectorXd* eigenvalues) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd lambda = solver.eigenvalues();
  if (eigenvalues) *eigenvalues = lambda;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -1e-10) {
      throw std::runtime_error("matrix has eigenvalue " + std::to_string(lambda[i]) +
                               " below -1e-10; covariance computation is broken");
    }
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  const auto& v = solver.eigenvectors();
  return v * lambda.asDiagonal() * v.transpose();
}

CoefficientSet sigma_matrix(const Model& model, const ParamVector& x, const ParamVector& y,
                            double eta, double delta) {
  if (!(eta > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("sigma_matrix needs eta > 0 and delta > 0");
  }
  const auto local = local_coefficients(model, x, target_values(model, y));
  CoefficientSet out;
  out.eta = eta;
  out.delta = delta;
  out.b = local.b;
  out.Sigma = local.sampling_factor * local.sampling_factor.transpose();
  out.beta_bar = local.reward_factor * local.reward_factor.transpose();
  Eigen::MatrixXd total = out.Sigma + out.beta_bar;
  total.diagonal().array() += delta / eta;
  out.sigma = symmetric_sqrt(total, &out.eigenvalues);
  return out;
}

namespace {

Eigen::VectorXd random_direction(int d, Rng& rng) {
  Eigen::VectorXd u(d);
  for (int i = 0; i < d; ++i) u[i] = rng.normal();
  return u / u.norm();
}

Eigen::VectorXd random_point(int d, double radius, Rng& rng) {
  return radius * rng.uniform() * random_direction(d, rng);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

}  // namespace

AssumptionEstimates estimate_constants(const Model& model, int n_pairs, double radius,
                                       std::uint64_t seed) {
  if (n_pairs < 1) throw std::invalid_argument("estimate_constants needs n_pairs >= 1");
  const int d = model.dim();
  const auto& net = model.net();
  const auto& mdp = model.mdp();
  AssumptionEstimates est;
  est.n_pairs = n_pairs;
  est.radius = radius;

  const ParamVector zero = ParamVector::Zero(d);
  est.b00_norm = exact_drift_b(model, zero, zero).norm();

  auto beta_hs = [&](const ParamVector& x) {
    const auto local = local_coefficients(model, x, target_values(model, x));
    return (local.reward_factor * local.reward_factor.transpose()).norm();
  };
  est.beta_max_hat = beta_hs(zero);

  Eigen::VectorXd g(d);
  for (int i = 0; i < n_pairs; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const ParamVector x1 = random_point(d, radius, rng);
    const ParamVector y1 = random_point(d, radius, rng);
    const double scale = radius * std::pow(10.0, -4.0 * rng.uniform());
    const ParamVector x2 = x1 + scale * random_direction(d, rng);
    const ParamVector y2 = y1 + scale * random_direction(d, rng);

    const auto tv1 = target_values(model, y1);
    const Eigen::VectorXd b1 = local_coefficients(model, x1, tv1).b;
    const Eigen::VectorXd b2 = exact_drift_b(model, x2, y2);
    const double gap = (x1 - x2).norm() + (y1 - y2).norm();
    if (gap > 0.0) est.L_hat = std::max(est.L_hat, (b1 - b2).norm() / gap);

    // Local Jacobians in x and y by forward differences.
    const double h = 1e-6 * (1.0 + x1.norm() + y1.norm());
    Eigen::MatrixXd jx(d, d), jy(d, d);
    ParamVector probe = x1;
    for (int k = 0; k < d; ++k) {
      probe[k] += h;
      jx.col(k) = (local_coefficients(model, probe, tv1).b - b1) / h;
      probe[k] = x1[k];
    }
    probe = y1;
    for (int k = 0; k < d; ++k) {
      probe[k] += h;
      jy.col(k) = (exact_drift_b(model, x1, probe) - b1) / h;
      probe[k] = y1[k];
    }
    est.L_hat = std::max({est.L_hat, spectral_norm(jx), spectral_norm(jy)});

    // Growth of the per-sample drift.
    const double denom = 1.0 + (x1 - y1).norm();
    for (const auto& sp : model.support()) {
      const double qx = net.value_and_grad(x1, sp.s, sp.a, g);
      const double td = mdp.reward_mean(sp.s, sp.a) + mdp.gamma * tv1.next_max[sp.s_next] - qx;
      est.K_hat = std::max(est.K_hat, std::abs(td) * g.norm() / denom);
    }
    est.beta_max_hat = std::max({est.beta_max_hat, beta_hs(x1), beta_hs(x2)});
  }
  return est;
}

}  // namespace dqnsdde
