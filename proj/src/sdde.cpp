#include "dqnsdde/sdde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dqnsdde {

void validate_sdde_config(const SddeConfig& cfg) {
  std::string errors;
  auto add = [&](const std::string& e) { errors += (errors.empty() ? "" : "; ") + e; };
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) add("eta must be positive");
  if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta)) add("delta must be non-negative");
  if (cfg.m < 1) add("m must be >= 1");
  if (cfg.T < 1) add("T must be >= 1");
  if (cfg.rho < 1) add("rho must be >= 1");
  if (cfg.sigma_cache_tolerance < 0.0) add("sigma_cache_tolerance must be non-negative");
  if (!errors.empty()) throw std::invalid_argument(errors);
}

namespace {

void fill_normal(Eigen::VectorXd& z, Rng& rng) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
}

class DqnSegment final : public SddeSegment {
 public:
  DqnSegment(const Model& model, TargetValues target, const SddeConfig& cfg)
      : model_(model), target_(std::move(target)), cfg_(cfg) {}

  void drift_and_noise(const Eigen::VectorXd& x, Rng& rng, Eigen::VectorXd& b,
                       Eigen::VectorXd& noise) override {
    const auto local = local_coefficients(model_, x, target_);
    b = local.b;
    const int d = model_.dim();
    const double iso = std::sqrt(cfg_.delta / cfg_.eta);
    if (cfg_.sampling == DiffusionSampling::Factor) {
      z1_.resize(local.sampling_factor.cols());
      z2_.resize(local.reward_factor.cols());
      z3_.resize(d);
      fill_normal(z1_, rng);
      fill_normal(z2_, rng);
      fill_normal(z3_, rng);
      noise.noalias() = local.sampling_factor * z1_;
      noise.noalias() += local.reward_factor * z2_;
      noise += iso * z3_;
      return;
    }
    const double tol = cfg_.sigma_cache_tolerance;
    if (!(sigma_.size() > 0 && tol > 0.0 && (x - cached_at_).norm() <= tol)) {
      Eigen::MatrixXd total = local.sampling_factor * local.sampling_factor.transpose() +
                              local.reward_factor * local.reward_factor.transpose();
      total.diagonal().array() += iso * iso;
      sigma_ = symmetric_sqrt(total);
      cached_at_ = x;
    }
    z3_.resize(d);
    fill_normal(z3_, rng);
    noise.noalias() = sigma_ * z3_;
  }

 private:
  const Model& model_;
  TargetValues target_;
  SddeConfig cfg_;
  Eigen::VectorXd z1_, z2_, z3_;
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd cached_at_;
};

class LinearSegment final : public SddeSegment {
 public:
  LinearSegment(Eigen::VectorXd y, double alpha, double beta, double c)
      : y_(std::move(y)), alpha_(alpha), beta_(beta), c_(c) {}

  void drift_and_noise(const Eigen::VectorXd& x, Rng& rng, Eigen::VectorXd& b,
                       Eigen::VectorXd& noise) override {
    b = alpha_ * x - beta_ * y_;
    noise.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) noise[i] = c_ * rng.normal();
  }

 private:
  Eigen::VectorXd y_;
  double alpha_;
  double beta_;
  double c_;
};

const char* sampling_name(DiffusionSampling s) {
  return s == DiffusionSampling::Factor ? "factor" : "symmetric_sqrt";
}

TrajectoryEnsemble run_impl(const SddeSystem& system, const Eigen::VectorXd& x0,
                            const SddeConfig& cfg, int n_traj,
                            const std::vector<long>& substeps, const std::vector<long>& labels,
                            const char* unit) {
  if (x0.size() != system.dim()) throw std::invalid_argument("x0 has wrong dimension");
  const long total = cfg.T * cfg.rho;
  const long segment = cfg.substeps_per_segment();
  const double h = cfg.eta / cfg.rho;
  TrajectoryEnsemble ens(labels, n_traj, system.dim());

  parallel_for(n_traj, cfg.threads, [&](int i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd x = x0;
    Eigen::VectorXd b(x0.size()), noise(x0.size());
    const double noise_scale = std::sqrt(cfg.eta * h);
    std::unique_ptr<SddeSegment> seg;
    std::size_t next_ck = 0;
    for (long j = 0;; ++j) {
      if (next_ck < substeps.size() && substeps[next_ck] == j) {
        ens.at(i, next_ck) = x;
        ++next_ck;
      }
      if (j == total || next_ck == substeps.size()) break;
      if (j % segment == 0) seg = system.freeze(x);
      seg->drift_and_noise(x, rng, b, noise);
      x = x - h * b + noise_scale * noise;
      if (!x.allFinite()) {
        throw std::runtime_error("non-finite SDDE state (trajectory " + std::to_string(i) +
                                 ", substep " + std::to_string(j) + ")");
      }
    }
  });
  ens.meta = {{"kind", "sdde"},    {"eta", cfg.eta},   {"delta", cfg.delta},
              {"m", cfg.m},        {"T", cfg.T},       {"rho", cfg.rho},
              {"seed", cfg.seed},  {"time_unit", unit}, {"sampling", sampling_name(cfg.sampling)}};
  return ens;
}

}  // namespace

DqnSddeSystem::DqnSddeSystem(const Model& model, const SddeConfig& cfg) : model_(model), cfg_(cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive for the DQN system");
}

std::unique_ptr<SddeSegment> DqnSddeSystem::freeze(const Eigen::VectorXd& y) const {
  return std::make_unique<DqnSegment>(model_, target_values(model_, y), cfg_);
}

LinearDelaySystem::LinearDelaySystem(int dim, double alpha, double beta, double c)
    : dim_(dim), alpha_(alpha), beta_(beta), c_(c) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
}

std::unique_ptr<SddeSegment> LinearDelaySystem::freeze(const Eigen::VectorXd& y) const {
  return std::make_unique<LinearSegment>(y, alpha_, beta_, c_);
}

Eigen::VectorXd sdde_euler_step(SddeSegment& segment, const Eigen::VectorXd& x, double h,
                                double eta, Rng& rng) {
  Eigen::VectorXd b(x.size()), noise(x.size());
  segment.drift_and_noise(x, rng, b, noise);
  return x - h * b + std::sqrt(eta * h) * noise;
}

Eigen::VectorXd sdde_euler_step(const Model& model, const ParamVector& x,
                                const ParamVector& x_delay, double h, const SddeConfig& cfg,
                                Rng& rng) {
  DqnSddeSystem system(model, cfg);
  auto seg = system.freeze(x_delay);
  return sdde_euler_step(*seg, x, h, cfg.eta, rng);
}

TrajectoryEnsemble run_sdde(const SddeSystem& system, const Eigen::VectorXd& x0,
                            const SddeConfig& cfg, int n_traj, const std::vector<long>& checkpoints) {
  validate_sdde_config(cfg);
  validate_checkpoints(checkpoints, cfg.T);
  std::vector<long> substeps;
  substeps.reserve(checkpoints.size());
  for (long c : checkpoints) substeps.push_back(c * cfg.rho);
  return run_impl(system, x0, cfg, n_traj, substeps, checkpoints, "eta");
}

TrajectoryEnsemble run_sdde(const Model& model, const ParamVector& x0, const SddeConfig& cfg,
                            int n_traj, const std::vector<long>& checkpoints) {
  DqnSddeSystem system(model, cfg);
  return run_sdde(system, x0, cfg, n_traj, checkpoints);
}

TrajectoryEnsemble run_sdde_substeps(const SddeSystem& system, const Eigen::VectorXd& x0,
                                     const SddeConfig& cfg, int n_traj,
                                     const std::vector<long>& checkpoint_substeps) {
  validate_sdde_config(cfg);
  validate_checkpoints(checkpoint_substeps, cfg.T * cfg.rho);
  return run_impl(system, x0, cfg, n_traj, checkpoint_substeps, checkpoint_substeps, "substep");
}

SddeMomentReport moment_check_X(const TrajectoryEnsemble& ensemble, const Eigen::VectorXd& x,
                                double eta, double delta) {
  if (ensemble.n_traj() < 1) throw std::invalid_argument("empty ensemble");
  SddeMomentReport r;
  r.initial_term = 1.0 + 2.0 * x.squaredNorm() + delta;
  double fit_num = 0.0, fit_den = 0.0, lin_num = 0.0, lin_den = 0.0;
  for (std::size_t c = 0; c < ensemble.checkpoints().size(); ++c) {
    const double t = static_cast<double>(ensemble.checkpoints()[c]) * eta;
    double m2 = 0.0, disp = 0.0;
    for (int i = 0; i < ensemble.n_traj(); ++i) {
      const auto xi = ensemble.at(i, c);
      m2 += xi.squaredNorm();
      disp += (xi - x).squaredNorm();
    }
    m2 /= ensemble.n_traj();
    disp /= ensemble.n_traj();
    r.finite = r.finite && std::isfinite(m2) && std::isfinite(disp);
    // Sampling noise is tolerated up to 5% of the previous value.
    if (!r.displacement_moments.empty() && disp < 0.95 * r.displacement_moments.back()) {
      r.monotone = false;
    }
    r.times.push_back(t);
    r.second_moments.push_back(m2);
    r.displacement_moments.push_back(disp);
    r.fitted_constant = std::max(r.fitted_constant, m2 / r.initial_term);
    if (t > 0.0) {
      const double f = t * (t + eta + delta);
      fit_num += disp * f;
      fit_den += f * f;
      lin_num += disp * t;
      lin_den += t * t;
    }
  }
  if (fit_den > 0.0) r.displacement_constant = fit_num / fit_den;
  if (lin_den > 0.0) r.displacement_slope = lin_num / lin_den;
  return r;
}

}  // namespace dqnsdde
