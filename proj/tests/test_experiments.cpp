#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dqnsdde/experiments.hpp"
#include "support.hpp"

using namespace dqnsdde;
using namespace dqnsdde::testing;

namespace {

// Stationary segment-boundary variance of the scalar delay equation by
// integrating the second-moment ODEs over one segment (RK4) and iterating
// the resulting linear map to its fixed point.
//   P = E X^2, C = E X Y, S = E Y^2 with Y frozen at the segment start:
//   P' = -2 alpha P + 2 beta C + eta c^2,  C' = -alpha C + beta S,  S' = 0.
double lyapunov_oracle(double alpha, double beta, double c, double eta, long m) {
  const double tau = static_cast<double>(m) * eta;
  const int steps = 20000;
  const double h = tau / steps;
  auto segment = [&](double V) {
    double P = V, C = V;
    const double S = V;
    auto fP = [&](double p, double q) { return -2 * alpha * p + 2 * beta * q + eta * c * c; };
    auto fC = [&](double q) { return -alpha * q + beta * S; };
    for (int i = 0; i < steps; ++i) {
      const double k1p = fP(P, C), k1c = fC(C);
      const double k2p = fP(P + 0.5 * h * k1p, C + 0.5 * h * k1c), k2c = fC(C + 0.5 * h * k1c);
      const double k3p = fP(P + 0.5 * h * k2p, C + 0.5 * h * k2c), k3c = fC(C + 0.5 * h * k2c);
      const double k4p = fP(P + h * k3p, C + h * k3c), k4c = fC(C + h * k3c);
      P += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
      C += h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c);
    }
    return P;
  };
  // The map is affine: V -> a V + b.
  const double b = segment(0.0);
  const double a = segment(1.0) - b;
  return b / (1.0 - a);
}

}  // namespace

TEST(Experiments, BoundShape) {
  const double eta = 0.01, delta = 0.5;
  const double expect =
      std::sqrt(eta * delta) * (1.0 + std::abs(std::log(eta)) + delta / std::pow(eta, 0.25));
  EXPECT_DOUBLE_EQ(rate_bound_shape(eta, delta), expect);
}

TEST(Experiments, LineFitExact) {
  const auto fit = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.ci_low, 2.0, 1e-10);
  EXPECT_NEAR(fit.ci_high, 2.0, 1e-10);
  EXPECT_EQ(fit.n, 4);
  const auto two = fit_line({0, 1}, {0, 1});
  EXPECT_TRUE(std::isinf(two.ci_high));
}

TEST(Experiments, ScalarClosedFormMatchesLyapunov) {
  for (long m : {1L, 5L, 20L}) {
    const double closed = scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, m);
    EXPECT_NEAR(closed, lyapunov_oracle(2.0, 1.5, 1.0, 0.1, m), 1e-9) << m;
  }
  EXPECT_NEAR(scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, 1), 0.09304, 1e-5);
  EXPECT_NEAR(scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, 5), 0.07426, 1e-5);
  EXPECT_NEAR(scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, 20), 0.05804, 1e-5);
}

TEST(Experiments, DegenerateRateSweepMatchesBaseline) {
  const Model model = degenerate_model();
  RateSweepParams p;
  p.etas = {0.1, 0.05};
  p.T0 = 4;
  p.n_traj = 1024;
  p.projected_coords = {0, 1};
  p.seed = 3;
  const auto r = rate_sweep(model, ParamVector::Zero(model.dim()), p);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.gate_ok);
    EXPECT_LT(row.sliced.value, 2.0 * row.sliced.baseline);
    EXPECT_FALSE(row.reliable);
  }
  EXPECT_FALSE(r.slope_defined);
}

TEST(Experiments, RateSweepGateRefusal) {
  const Model model = example_model();
  RateSweepParams p;
  p.etas = {0.1};
  p.T0 = 1;
  p.n_traj = 8;
  EXPECT_THROW(rate_sweep(model, model.net().init_params(0.5, 7), p), std::runtime_error);
  p.force = true;
  const auto r = rate_sweep(model, model.net().init_params(0.5, 7), p);
  EXPECT_FALSE(r.rows[0].gate_ok);
}

TEST(Experiments, VarianceStudyDeterministic) {
  const Model model = example_model({3});
  VarianceStudyParams p;
  p.m_values = {1, 2};
  p.T = 8;
  p.n_traj = 32;
  p.scalar.T = 20;
  p.scalar.stationary_from = 10;
  p.scalar.n_traj = 128;
  p.seed = 4;
  const ParamVector th = model.net().init_params(0.5, 7);
  const auto a = variance_study(model, th, p);
  p.threads = 3;
  const auto b = variance_study(model, th, p);
  std::ostringstream ca, cb;
  a.write_csv(ca);
  b.write_csv(cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(a.to_json(), b.to_json());
  // The m = 1 arm is its own reference.
  for (const auto& row : a.rows) {
    if (row.m == 1) {
      EXPECT_DOUBLE_EQ(row.ratio_X, 1.0);
    }
  }
  ASSERT_EQ(a.scalar.size(), 2u);
  EXPECT_NEAR(a.scalar[0].predicted, scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, 1), 1e-15);
}

TEST(Experiments, MomentSuiteSmall) {
  const Model model = degenerate_model();
  MomentSuiteParams p;
  p.n_traj = 512;
  p.seed = 5;
  const auto r = moment_suite(model, p);
  ASSERT_EQ(r.arms.size(), 3u);
  EXPECT_TRUE(r.finite);
  // x = 0 arm starts at the origin.
  EXPECT_EQ(r.arms[0].chain.moments[0], 0.0);
  EXPECT_TRUE(r.passed());
}
