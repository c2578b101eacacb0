#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dqnsdde/coefficients.hpp"
#include "dqnsdde/dqn_chain.hpp"
#include "dqnsdde/random.hpp"

namespace dqnsdde {

/// Smooth test function with closed-form derivatives.
class TestFunction {
 public:
  enum class Kind { Quadratic, GaussianBump };

  /// f(x) = 1/2 x^T A x + g^T x + c. A is symmetrized.
  static TestFunction quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& g, double c);
  /// f(x) = exp(-|x - center|^2 / (2 width^2)).
  static TestFunction gaussian_bump(const Eigen::VectorXd& center, double width);
  static TestFunction constant(int dim, double c);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(vec_.size()); }
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& linear() const { return vec_; }

  nlohmann::json to_json() const;
  /// {"kind":"quadratic","A":[[..]],"g":[..],"c":0} with "A" optionally the
  /// string "identity", or {"kind":"gaussian_bump","center":[..],"width":1}.
  static TestFunction from_json(const nlohmann::json& j, int dim);

 private:
  Kind kind_ = Kind::Quadratic;
  Eigen::MatrixXd A_;
  Eigen::VectorXd vec_;  // g for quadratics, center for bumps
  double scalar_ = 0.0;  // c for quadratics, width for bumps
};

struct McValue {
  double value = 0.0;
  double std_error = 0.0;
};

/// E[f(theta_1) | theta_0 = x] - f(x) for one step with the target frozen.
///
/// Draws come in antithetic pairs (the same pair (s,a,s') with W and -W, and
/// the reward deviation mirrored). With `control_variate` the linear term
/// grad f(x) . (theta_1 - x), whose mean -eta <b, grad f> is known exactly,
/// is subtracted from each draw and its mean added back.
McValue generator_theta(const TestFunction& f, const Model& model, const ParamVector& x,
                        const ParamVector& target, const AlgoConfig& cfg, int n_mc, Rng& rng,
                        bool control_variate = true);

/// 1/2 <eta Sigma + eta beta_bar + delta I, hess f> - <b, grad f>, exact.
double generator_X(const TestFunction& f, const Model& model, const ParamVector& x,
                   const ParamVector& target, double eta, double delta);

struct GeneratorGap {
  double eta = 0.0;
  McValue chain;            // generator_theta
  double sdde = 0.0;        // generator_X
  double gap = 0.0;         // |eta generator_X - generator_theta|
  double gap_std_error = 0.0;

  nlohmann::json to_json() const;
};

GeneratorGap generator_gap(const TestFunction& f, const Model& model, const ParamVector& x,
                           const ParamVector& target, const AlgoConfig& cfg, int n_mc, Rng& rng);

struct GapSweep {
  std::vector<GeneratorGap> points;  // one per eta, in the given order
  double fitted_order = 0.0;         // log-log slope of gap against eta
  std::vector<double> ratios;        // gap(eta_{k+1}) / gap(eta_k)
};

/// Gap at each eta with the rest of cfg fixed; eta k uses stream
/// derive_seed(seed, k).
GapSweep generator_gap_sweep(const TestFunction& f, const Model& model, const ParamVector& x,
                             const ParamVector& target, AlgoConfig cfg,
                             const std::vector<double>& etas, int n_mc, std::uint64_t seed);

/// Step-size gate eta <= min{delta, 1/(64 L), L/(8 K^2)} evaluated with the
/// estimated constants inflated by `safety`.
struct AssumptionReport {
  AssumptionEstimates estimates;
  double eta = 0.0;
  double delta = 0.0;
  double safety = 2.0;
  double limit_delta = 0.0;
  double limit_lipschitz = 0.0;  // 1 / (64 L)
  double limit_growth = 0.0;     // L / (8 K^2)
  double eta_max = 0.0;
  std::string binding;           // name of the smallest limit
  bool gate_ok = false;
  bool delta_ok = false;         // delta <= 1

  bool ok() const { return gate_ok && delta_ok; }
  nlohmann::json to_json() const;
  std::string to_string() const;
};

AssumptionReport assumption_report(const Model& model, double eta, double delta, int n_pairs = 64,
                                   double radius = 1.0, std::uint64_t seed = 0, double safety = 2.0);

/// Gate limits for given constants; zero L or K removes the matching limit.
AssumptionReport gate_from_estimates(const AssumptionEstimates& est, double eta, double delta,
                                     double safety = 2.0);

}  // namespace dqnsdde
