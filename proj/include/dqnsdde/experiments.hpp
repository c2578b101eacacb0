#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/diagnostics.hpp"
#include "dqnsdde/dqn_chain.hpp"
#include "dqnsdde/sdde.hpp"
#include "dqnsdde/wasserstein.hpp"

namespace dqnsdde {

/// sqrt(eta delta) (1 + |ln eta| + delta / eta^{1/4}).
double rate_bound_shape(double eta, double delta);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;   // 95% interval on the slope; infinite with 2 points
  double ci_high = 0.0;
  int n = 0;
};

/// Ordinary least squares of y on x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateSweepParams {
  std::vector<double> etas{0.1, 0.05, 0.025, 0.0125};
  double delta = 0.5;
  long m = 5;
  double eta0 = 0.1;  // T = round(T0 eta0 / eta)
  long T0 = 10;
  int n_traj = 4096;
  int n_proj = 64;
  int assignment_cap = 512;
  std::vector<int> projected_coords{0, 1, 2, 3};
  int rho = 20;
  DiffusionSampling sampling = DiffusionSampling::Factor;
  RewardNoise reward_noise = RewardNoise::Diagonal;
  std::uint64_t seed = 0;
  int threads = 1;
  bool force = false;      // run even when the step-size gate fails
  int gate_pairs = 64;
  double gate_radius = 1.0;
  double gate_safety = 2.0;
};

struct RateSweepRow {
  double eta = 0.0;
  double delta = 0.0;
  long T = 0;
  long m = 0;
  int n_traj = 0;
  W1Estimate sliced;
  W1Estimate assignment;            // on assignment_cap subsamples
  W1Estimate projected_assignment;  // on projected_coords
  W1Estimate projected_sliced;
  double bound = 0.0;               // rate_bound_shape(eta, delta)
  bool reliable = false;            // sliced value >= 2 x its baseline
  bool gate_ok = false;
};

struct RateSweepResult {
  std::vector<RateSweepRow> rows;  // eta descending
  LineFit fit;                     // log W1 against log eta over reliable rows
  bool slope_defined = false;      // at least two reliable rows
  double bound_constant = 0.0;     // smallest c with every reliable row <= c bound
  bool monotone = true;            // reliable W1 non-increasing as eta shrinks, 2 pooled SE
  AssumptionReport gate;           // at the largest eta

  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
  /// x = eta, y = sliced W1, error = its standard error, plus c bound(eta).
  void write_plot_csv(std::ostream& os) const;
};

/// Throws std::runtime_error naming the binding constraint when an eta fails
/// the gate and params.force is false.
RateSweepResult rate_sweep(const Model& model, const ParamVector& theta0,
                           const RateSweepParams& params);

/// Variance at segment boundaries of dX = -(alpha X - beta Y) dt + sqrt(eta) c dB
/// with Y held for tau = m eta, in the stationary regime.
double scalar_delay_stationary_variance(double alpha, double beta, double c, double eta, long m);

struct ScalarOracleParams {
  double alpha = 2.0;
  double beta = 1.5;
  double c = 1.0;
  double eta = 0.1;
  long T = 200;
  long stationary_from = 100;  // first checkpoint step used for the average
  int n_traj = 8192;
  int rho = 20;
};

struct VarianceStudyParams {
  std::vector<long> m_values{1, 5, 20};
  double eta = 0.0125;
  double delta = 0.5;
  long T = 80;
  std::vector<long> checkpoints;  // empty: multiples of every m up to T
  int n_traj = 1024;
  int rho = 20;
  RewardNoise reward_noise = RewardNoise::Diagonal;
  DiffusionSampling sampling = DiffusionSampling::Factor;
  std::uint64_t seed = 0;
  int threads = 1;
  ScalarOracleParams scalar;
  bool run_scalar = true;
};

struct VarianceRow {
  long m = 0;
  long step = 0;
  double trace_X = 0.0;
  double trace_theta = 0.0;
  double ratio_X = 0.0;      // against the m = 1 arm at the same step
  double ratio_theta = 0.0;
};

struct ScalarArm {
  long m = 0;
  double empirical = 0.0;   // mean variance over stationary checkpoints
  double predicted = 0.0;   // closed form
  double empirical_margin = 0.0;  // 1 - empirical / empirical(m = 1)
  double predicted_margin = 0.0;  // 1 - predicted / predicted(m = 1)
};

struct VarianceStudyResult {
  std::vector<VarianceRow> rows;  // m-major, then checkpoint
  std::vector<ScalarArm> scalar;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
  void write_plot_csv(std::ostream& os) const;
  void write_scalar_csv(std::ostream& os) const;
};

VarianceStudyResult variance_study(const Model& model, const ParamVector& theta0,
                                   const VarianceStudyParams& params);

struct MomentSuiteParams {
  std::vector<double> scales{0.0, 1.0, 5.0};  // x = scale e_1
  double eta = 0.0125;
  double delta = 0.5;
  long m = 5;
  long T = 5;  // horizon in steps; the bounds hold within one target window
  int n_traj = 4096;
  int rho = 20;
  RewardNoise reward_noise = RewardNoise::Diagonal;
  DiffusionSampling sampling = DiffusionSampling::Factor;
  std::uint64_t seed = 0;
  int threads = 1;
  double stability_factor = 3.0;
  double excess_factor = 10.0;
};

struct MomentArm {
  double scale = 0.0;
  MomentReport chain;      // fourth moments of theta
  SddeMomentReport sdde;   // second moments of X
};

struct MomentSuiteResult {
  std::vector<MomentArm> arms;
  double pooled_chain = 0.0;  // geometric mean of per-arm constants
  double pooled_sdde = 0.0;
  double spread_chain = 0.0;  // max / min of per-arm constants
  double spread_sdde = 0.0;
  bool chain_stable = false;
  bool sdde_stable = false;
  bool chain_within_fit = false;  // every moment <= excess x pooled x initial term
  bool sdde_within_fit = false;
  bool finite = true;

  bool passed() const {
    return chain_stable && sdde_stable && chain_within_fit && sdde_within_fit && finite;
  }
  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

MomentSuiteResult moment_suite(const Model& model, const MomentSuiteParams& params);

}  // namespace dqnsdde
