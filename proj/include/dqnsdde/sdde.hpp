#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/dqn_chain.hpp"
#include "dqnsdde/ensemble.hpp"
#include "dqnsdde/random.hpp"

namespace dqnsdde {

/// How a draw of sigma(x, y) Z is produced. Both give the same Gaussian law.
///
/// Factor: sum of the sampling and reward factor columns times independent
/// normals plus sqrt(delta/eta) Z, costing O(d K) per step.
/// SymmetricSqrt: the eigendecomposition root applied to Z in R^d.
enum class DiffusionSampling { Factor, SymmetricSqrt };

struct SddeConfig {
  double eta = 0.01;
  double delta = 0.5;
  long m = 1;
  long T = 1;    // horizon in units of eta; final time T * eta
  int rho = 20;  // Euler substeps per eta
  std::uint64_t seed = 0;
  DiffusionSampling sampling = DiffusionSampling::Factor;
  /// SymmetricSqrt only: reuse sigma while x stays within this distance of
  /// the point it was computed at. Zero recomputes at every substep.
  double sigma_cache_tolerance = 0.0;
  int threads = 1;

  long substeps_per_segment() const { return m * rho; }
};

void validate_sdde_config(const SddeConfig& cfg);

/// Coefficients with the delay argument y frozen: the SDE that drives one
/// segment [k m eta, (k+1) m eta).
class SddeSegment {
 public:
  virtual ~SddeSegment() = default;
  /// Writes b(x, y) and one draw of sigma(x, y) Z with Z ~ N(0, I).
  virtual void drift_and_noise(const Eigen::VectorXd& x, Rng& rng, Eigen::VectorXd& b,
                               Eigen::VectorXd& noise) = 0;
};

/// dX = -b(X_t, X_delay) dt + sqrt(eta) sigma(X_t, X_delay) dB_t.
class SddeSystem {
 public:
  virtual ~SddeSystem() = default;
  virtual int dim() const = 0;
  virtual std::unique_ptr<SddeSegment> freeze(const Eigen::VectorXd& y) const = 0;
};

/// The system induced by a DQN model: b = exact drift,
/// sigma = [Sigma + beta_bar + (delta/eta) I]^{1/2}.
class DqnSddeSystem final : public SddeSystem {
 public:
  DqnSddeSystem(const Model& model, const SddeConfig& cfg);
  int dim() const override { return model_.dim(); }
  std::unique_ptr<SddeSegment> freeze(const Eigen::VectorXd& y) const override;

 private:
  const Model& model_;
  SddeConfig cfg_;
};

/// b(x, y) = alpha x - beta y, sigma = c I, for closed-form checks.
/// c = 0 gives the deterministic delay ODE.
class LinearDelaySystem final : public SddeSystem {
 public:
  LinearDelaySystem(int dim, double alpha, double beta, double c);
  int dim() const override { return dim_; }
  std::unique_ptr<SddeSegment> freeze(const Eigen::VectorXd& y) const override;

 private:
  int dim_;
  double alpha_;
  double beta_;
  double c_;
};

/// x - b h + sqrt(eta) sqrt(h) sigma Z.
Eigen::VectorXd sdde_euler_step(SddeSegment& segment, const Eigen::VectorXd& x, double h,
                                double eta, Rng& rng);
Eigen::VectorXd sdde_euler_step(const Model& model, const ParamVector& x,
                                const ParamVector& x_delay, double h, const SddeConfig& cfg,
                                Rng& rng);

/// Checkpoints in units of eta (integers in [0, T]).
TrajectoryEnsemble run_sdde(const SddeSystem& system, const Eigen::VectorXd& x0,
                            const SddeConfig& cfg, int n_traj, const std::vector<long>& checkpoints);
TrajectoryEnsemble run_sdde(const Model& model, const ParamVector& x0, const SddeConfig& cfg,
                            int n_traj, const std::vector<long>& checkpoints);

/// Checkpoints in substeps (integers in [0, T rho]). The delay argument is
/// snapshotted every m rho substeps; trajectory i uses stream
/// derive_seed(cfg.seed, i).
TrajectoryEnsemble run_sdde_substeps(const SddeSystem& system, const Eigen::VectorXd& x0,
                                     const SddeConfig& cfg, int n_traj,
                                     const std::vector<long>& checkpoint_substeps);

struct SddeMomentReport {
  std::vector<double> times;
  std::vector<double> second_moments;        // E|X_t|^2
  std::vector<double> displacement_moments;  // E|X_t - x|^2
  double initial_term = 0.0;                 // 1 + |x|^2 + E|theta_0|^2 + delta
  double fitted_constant = 0.0;              // max E|X_t|^2 / initial_term
  double displacement_constant = 0.0;        // least squares vs t (t + eta + delta)
  double displacement_slope = 0.0;           // least squares vs t
  bool monotone = true;                      // displacement nondecreasing in t
  bool finite = true;
};

/// Moments of an SDDE ensemble (checkpoints in units of eta) started at x.
SddeMomentReport moment_check_X(const TrajectoryEnsemble& ensemble, const Eigen::VectorXd& x,
                                double eta, double delta);

}  // namespace dqnsdde
