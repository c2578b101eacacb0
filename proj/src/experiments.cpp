#include "dqnsdde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace dqnsdde {

double rate_bound_shape(double eta, double delta) {
  return std::sqrt(eta * delta) * (1.0 + std::abs(std::log(eta)) + delta / std::pow(eta, 0.25));
}

namespace {

// Two-sided 95% Student t quantiles for 1..30 degrees of freedom.
double t_quantile_95(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 30) return table[dof - 1];
  return 1.960;
}

std::uint64_t eta_seed(std::uint64_t seed, double eta) {
  return derive_seed(seed, "eta=" + format_double(eta));
}

double trace_covariance(const SampleMatrix& s) {
  const Eigen::RowVectorXd mean = s.colwise().mean();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) acc += (s.row(i) - mean).squaredNorm();
  return s.rows() > 1 ? acc / static_cast<double>(s.rows() - 1) : 0.0;
}

double geometric_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += std::log(x);
  return std::exp(acc / static_cast<double>(v.size()));
}

std::vector<long> all_steps(long T) {
  std::vector<long> steps(T + 1);
  std::iota(steps.begin(), steps.end(), 0L);
  return steps;
}

}  // namespace

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 points");
  LineFit fit;
  fit.n = static_cast<int>(x.size());
  const double n = fit.n;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line needs distinct x values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (fit.n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      ssr += r * r;
    }
    const double se = std::sqrt(ssr / (n - 2.0) / sxx);
    const double t = t_quantile_95(fit.n - 2);
    fit.ci_low = fit.slope - t * se;
    fit.ci_high = fit.slope + t * se;
  } else {
    fit.ci_low = -std::numeric_limits<double>::infinity();
    fit.ci_high = std::numeric_limits<double>::infinity();
  }
  return fit;
}

// ---------------------------------------------------------------- rate sweep

RateSweepResult rate_sweep(const Model& model, const ParamVector& theta0,
                           const RateSweepParams& params) {
  if (params.etas.empty()) throw std::invalid_argument("rate sweep needs at least one eta");
  if (params.n_traj < 2) throw std::invalid_argument("rate sweep needs n_traj >= 2");
  std::vector<double> etas = params.etas;
  std::sort(etas.begin(), etas.end(), std::greater<>());
  if (std::adjacent_find(etas.begin(), etas.end()) != etas.end()) {
    throw std::invalid_argument("rate sweep etas must be distinct");
  }

  RateSweepResult result;
  const auto estimates = estimate_constants(model, params.gate_pairs, params.gate_radius,
                                            derive_seed(params.seed, "gate"));
  result.gate = gate_from_estimates(estimates, etas.front(), params.delta, params.gate_safety);
  const double horizon = static_cast<double>(params.T0) * params.eta0;

  for (double eta : etas) {
    RateSweepRow row;
    row.eta = eta;
    row.delta = params.delta;
    row.m = params.m;
    row.n_traj = params.n_traj;
    row.T = std::lround(horizon / eta);
    if (row.T < 1) throw std::invalid_argument("rate sweep horizon is shorter than one step");
    if (std::abs(row.T * eta - horizon) > eta / params.rho + 1e-12) {
      throw std::invalid_argument("eta = " + format_double(eta) +
                                  " does not divide the fixed horizon T0 eta0 within one substep");
    }
    const auto gate = gate_from_estimates(estimates, eta, params.delta, params.gate_safety);
    row.gate_ok = gate.ok();
    if (!row.gate_ok && !params.force) {
      throw std::runtime_error("eta = " + format_double(eta) + " fails the step-size gate (limit " +
                               format_double(gate.eta_max) + " set by " + gate.binding +
                               (gate.delta_ok ? "" : "; delta > 1") + "); pass --force to run anyway");
    }
    row.bound = rate_bound_shape(eta, params.delta);

    const std::uint64_t es = eta_seed(params.seed, eta);
    AlgoConfig ac;
    ac.eta = eta;
    ac.delta = params.delta;
    ac.m = params.m;
    ac.T = row.T;
    ac.seed = derive_seed(es, "chain");
    ac.reward_noise = params.reward_noise;
    ac.threads = params.threads;
    SddeConfig sc;
    sc.eta = eta;
    sc.delta = params.delta;
    sc.m = params.m;
    sc.T = row.T;
    sc.rho = params.rho;
    sc.seed = derive_seed(es, "sdde");
    sc.sampling = params.sampling;
    sc.threads = params.threads;

    const SampleMatrix chain = run_dqn(model, theta0, ac, params.n_traj, {row.T}).slice(0);
    const SampleMatrix sdde = run_sdde(model, theta0, sc, params.n_traj, {row.T}).slice(0);

    Rng sliced_rng(derive_seed(es, "sliced"));
    row.sliced = w1_sliced(chain, sdde, params.n_proj, sliced_rng);
    row.assignment =
        w1_assignment_subsampled(chain, sdde, params.assignment_cap, derive_seed(es, "assignment"));
    if (!params.projected_coords.empty()) {
      const SampleMatrix pc = project_coordinates(chain, params.projected_coords);
      const SampleMatrix ps = project_coordinates(sdde, params.projected_coords);
      row.projected_assignment =
          w1_assignment_subsampled(pc, ps, params.assignment_cap, derive_seed(es, "projected"));
      Rng proj_rng(derive_seed(es, "projected_sliced"));
      row.projected_sliced = w1_sliced(pc, ps, params.n_proj, proj_rng);
    }
    row.reliable = row.sliced.value >= 2.0 * row.sliced.baseline;
    result.rows.push_back(row);
  }

  std::vector<double> lx, ly;
  const RateSweepRow* prev = nullptr;
  for (const auto& row : result.rows) {
    if (!row.reliable) continue;
    lx.push_back(std::log(row.eta));
    ly.push_back(std::log(row.sliced.value));
    result.bound_constant = std::max(result.bound_constant, row.sliced.value / row.bound);
    if (prev) {
      const double se = std::hypot(prev->sliced.std_error, row.sliced.std_error);
      if (row.sliced.value > prev->sliced.value + 2.0 * se) result.monotone = false;
    }
    prev = &row;
  }
  if (lx.size() >= 2) {
    result.fit = fit_line(lx, ly);
    result.slope_defined = true;
  } else {
    result.fit.n = static_cast<int>(lx.size());
  }
  return result;
}

nlohmann::json RateSweepResult::to_json() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"eta", r.eta},
                         {"delta", r.delta},
                         {"T", r.T},
                         {"m", r.m},
                         {"n_traj", r.n_traj},
                         {"w1_sliced", r.sliced.to_json()},
                         {"w1_assignment", r.assignment.to_json()},
                         {"w1_projected_assignment", r.projected_assignment.to_json()},
                         {"w1_projected_sliced", r.projected_sliced.to_json()},
                         {"bound_shape", r.bound},
                         {"reliable", r.reliable},
                         {"gate_ok", r.gate_ok}});
  }
  return {{"rows", rows_json},
          {"slope_defined", slope_defined},
          {"slope", slope_defined ? nlohmann::json(fit.slope) : nlohmann::json(nullptr)},
          {"slope_ci", {finite_or_null(fit.ci_low), finite_or_null(fit.ci_high)}},
          {"n_reliable", fit.n},
          {"bound_constant", bound_constant},
          {"monotone", monotone},
          {"gate", gate.to_json()}};
}

void RateSweepResult::write_csv(std::ostream& os) const {
  os << "eta,delta,T,m,n_traj,w1_sliced,w1_sliced_stderr,w1_assignment,w1_assignment_stderr,"
        "baseline,assignment_baseline,w1_projected_assignment,w1_projected_sliced,bound_shape,"
        "reliable,gate_ok\n";
  for (const auto& r : rows) {
    os << format_double(r.eta) << ',' << format_double(r.delta) << ',' << r.T << ',' << r.m << ','
       << r.n_traj << ',' << format_double(r.sliced.value) << ',' << format_double(r.sliced.std_error)
       << ',' << format_double(r.assignment.value) << ',' << format_double(r.assignment.std_error)
       << ',' << format_double(r.sliced.baseline) << ',' << format_double(r.assignment.baseline)
       << ',' << format_double(r.projected_assignment.value) << ','
       << format_double(r.projected_sliced.value) << ',' << format_double(r.bound) << ','
       << (r.reliable ? 1 : 0) << ',' << (r.gate_ok ? 1 : 0) << '\n';
  }
}

void RateSweepResult::write_plot_csv(std::ostream& os) const {
  os << "x,y,error,baseline,bound_fit\n";
  for (const auto& r : rows) {
    os << format_double(r.eta) << ',' << format_double(r.sliced.value) << ','
       << format_double(r.sliced.std_error) << ',' << format_double(r.sliced.baseline) << ','
       << format_double(bound_constant * r.bound) << '\n';
  }
}

// ------------------------------------------------------------ variance study

double scalar_delay_stationary_variance(double alpha, double beta, double c, double eta, long m) {
  if (!(alpha > 0.0) || !(std::abs(beta) < alpha)) {
    throw std::invalid_argument("scalar delay model needs alpha > 0 and |beta| < alpha");
  }
  const double tau = static_cast<double>(m) * eta;
  const double decay = std::exp(-alpha * tau);
  // Over one segment X' = rho X + noise with Y = X at the segment start.
  const double rho = decay + (beta / alpha) * (1.0 - decay);
  const double v = eta * c * c * (1.0 - decay * decay) / (2.0 * alpha);
  return v / (1.0 - rho * rho);
}

namespace {

std::vector<ScalarArm> scalar_oracle(const std::vector<long>& m_values, const ScalarOracleParams& p,
                                     std::uint64_t seed, int threads) {
  long lcm = 1;
  for (long m : m_values) lcm = std::lcm(lcm, m);
  std::vector<long> checkpoints;
  for (long k = 0; k <= p.T; k += lcm) {
    if (k >= p.stationary_from) checkpoints.push_back(k);
  }
  if (checkpoints.empty()) {
    throw std::invalid_argument("scalar oracle: no checkpoint that is a multiple of every m in [" +
                                std::to_string(p.stationary_from) + ", " + std::to_string(p.T) + "]");
  }
  const LinearDelaySystem system(1, p.alpha, p.beta, p.c);
  std::vector<ScalarArm> arms;
  for (long m : m_values) {
    SddeConfig sc;
    sc.eta = p.eta;
    sc.delta = 0.0;
    sc.m = m;
    sc.T = p.T;
    sc.rho = p.rho;
    sc.seed = derive_seed(derive_seed(seed, "scalar"), static_cast<std::uint64_t>(m));
    sc.threads = threads;
    const auto ens = run_sdde(system, Eigen::VectorXd::Zero(1), sc, p.n_traj, checkpoints);
    ScalarArm arm;
    arm.m = m;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) arm.empirical += trace_covariance(ens.slice(c));
    arm.empirical /= static_cast<double>(checkpoints.size());
    arm.predicted = scalar_delay_stationary_variance(p.alpha, p.beta, p.c, p.eta, m);
    arms.push_back(arm);
  }
  const auto base = std::find_if(arms.begin(), arms.end(), [](const ScalarArm& a) { return a.m == 1; });
  for (auto& arm : arms) {
    arm.empirical_margin = 1.0 - arm.empirical / base->empirical;
    arm.predicted_margin = 1.0 - arm.predicted / base->predicted;
  }
  return arms;
}

}  // namespace

VarianceStudyResult variance_study(const Model& model, const ParamVector& theta0,
                                   const VarianceStudyParams& params) {
  if (std::find(params.m_values.begin(), params.m_values.end(), 1L) == params.m_values.end()) {
    throw std::invalid_argument("variance study m_values must include 1");
  }
  for (long m : params.m_values) {
    if (m < 1) throw std::invalid_argument("variance study m values must be >= 1");
  }
  std::vector<long> checkpoints = params.checkpoints;
  if (checkpoints.empty()) {
    long lcm = 1;
    for (long m : params.m_values) lcm = std::lcm(lcm, m);
    for (long k = 0; k <= params.T; k += lcm) checkpoints.push_back(k);
  }
  validate_checkpoints(checkpoints, params.T);

  VarianceStudyResult result;
  std::vector<std::vector<VarianceRow>> arms;
  for (long m : params.m_values) {
    const std::uint64_t arm_seed = derive_seed(params.seed, "m=" + std::to_string(m));
    AlgoConfig ac;
    ac.eta = params.eta;
    ac.delta = params.delta;
    ac.m = m;
    ac.T = params.T;
    ac.seed = derive_seed(arm_seed, "chain");
    ac.reward_noise = params.reward_noise;
    ac.threads = params.threads;
    SddeConfig sc;
    sc.eta = params.eta;
    sc.delta = params.delta;
    sc.m = m;
    sc.T = params.T;
    sc.rho = params.rho;
    sc.seed = derive_seed(arm_seed, "sdde");
    sc.sampling = params.sampling;
    sc.threads = params.threads;
    const auto chain = run_dqn(model, theta0, ac, params.n_traj, checkpoints);
    const auto sdde = run_sdde(model, theta0, sc, params.n_traj, checkpoints);
    std::vector<VarianceRow> rows;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      VarianceRow row;
      row.m = m;
      row.step = checkpoints[c];
      row.trace_X = trace_covariance(sdde.slice(c));
      row.trace_theta = trace_covariance(chain.slice(c));
      rows.push_back(row);
    }
    arms.push_back(std::move(rows));
  }
  const auto base_index = static_cast<std::size_t>(
      std::find(params.m_values.begin(), params.m_values.end(), 1L) - params.m_values.begin());
  const auto ratio = [](double a, double b) { return b > 0.0 ? a / b : (a > 0.0 ? INFINITY : 1.0); };
  for (auto& rows : arms) {
    for (std::size_t c = 0; c < rows.size(); ++c) {
      rows[c].ratio_X = ratio(rows[c].trace_X, arms[base_index][c].trace_X);
      rows[c].ratio_theta = ratio(rows[c].trace_theta, arms[base_index][c].trace_theta);
      result.rows.push_back(rows[c]);
    }
  }
  if (params.run_scalar) result.scalar = scalar_oracle(params.m_values, params.scalar, params.seed, params.threads);
  return result;
}

nlohmann::json VarianceStudyResult::to_json() const {
  nlohmann::json scalar_json = nlohmann::json::array();
  for (const auto& a : scalar) {
    scalar_json.push_back({{"m", a.m},
                           {"empirical_variance", a.empirical},
                           {"predicted_variance", a.predicted},
                           {"empirical_margin", a.empirical_margin},
                           {"predicted_margin", a.predicted_margin}});
  }
  nlohmann::json final_ratios = nlohmann::json::object();
  long last = rows.empty() ? 0 : rows.back().step;
  for (const auto& r : rows) {
    if (r.step == last) {
      final_ratios["m=" + std::to_string(r.m)] = {{"ratio_X", r.ratio_X}, {"ratio_theta", r.ratio_theta}};
    }
  }
  return {{"n_rows", rows.size()}, {"final_ratios", final_ratios}, {"scalar_oracle", scalar_json}};
}

void VarianceStudyResult::write_csv(std::ostream& os) const {
  os << "m,step,trace_X,trace_theta,ratio_X,ratio_theta\n";
  for (const auto& r : rows) {
    os << r.m << ',' << r.step << ',' << format_double(r.trace_X) << ','
       << format_double(r.trace_theta) << ',' << format_double(r.ratio_X) << ','
       << format_double(r.ratio_theta) << '\n';
  }
}

void VarianceStudyResult::write_plot_csv(std::ostream& os) const {
  os << "series,x,y,error\n";
  for (const auto& r : rows) {
    os << "X_m" << r.m << ',' << r.step << ',' << format_double(r.trace_X) << ",0\n";
  }
  for (const auto& r : rows) {
    os << "theta_m" << r.m << ',' << r.step << ',' << format_double(r.trace_theta) << ",0\n";
  }
}

void VarianceStudyResult::write_scalar_csv(std::ostream& os) const {
  os << "m,empirical_variance,predicted_variance,empirical_margin,predicted_margin\n";
  for (const auto& a : scalar) {
    os << a.m << ',' << format_double(a.empirical) << ',' << format_double(a.predicted) << ','
       << format_double(a.empirical_margin) << ',' << format_double(a.predicted_margin) << '\n';
  }
}

// -------------------------------------------------------------- moment suite

MomentSuiteResult moment_suite(const Model& model, const MomentSuiteParams& params) {
  if (params.scales.empty()) throw std::invalid_argument("moment suite needs at least one scale");
  const int d = model.dim();
  const std::vector<long> steps = all_steps(params.T);
  MomentSuiteResult result;
  std::vector<double> chain_c, sdde_c;
  for (std::size_t k = 0; k < params.scales.size(); ++k) {
    const double scale = params.scales[k];
    ParamVector x = ParamVector::Zero(d);
    x[0] = scale;
    const std::uint64_t arm_seed = derive_seed(params.seed, "scale=" + format_double(scale));
    AlgoConfig ac;
    ac.eta = params.eta;
    ac.delta = params.delta;
    ac.m = params.m;
    ac.T = params.T;
    ac.seed = derive_seed(arm_seed, "chain");
    ac.reward_noise = params.reward_noise;
    ac.threads = params.threads;
    SddeConfig sc;
    sc.eta = params.eta;
    sc.delta = params.delta;
    sc.m = params.m;
    sc.T = params.T;
    sc.rho = params.rho;
    sc.seed = derive_seed(arm_seed, "sdde");
    sc.sampling = params.sampling;
    sc.threads = params.threads;
    MomentArm arm;
    arm.scale = scale;
    arm.chain = moment_check_theta(run_dqn(model, x, ac, params.n_traj, steps), x);
    arm.sdde = moment_check_X(run_sdde(model, x, sc, params.n_traj, steps), x, params.eta, params.delta);
    result.finite = result.finite && arm.chain.finite && arm.sdde.finite;
    chain_c.push_back(arm.chain.fitted_constant);
    sdde_c.push_back(arm.sdde.fitted_constant);
    result.arms.push_back(std::move(arm));
  }
  const auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 ? *hi / *lo : INFINITY;
  };
  result.pooled_chain = geometric_mean(chain_c);
  result.pooled_sdde = geometric_mean(sdde_c);
  result.spread_chain = spread(chain_c);
  result.spread_sdde = spread(sdde_c);
  result.chain_stable = result.spread_chain <= params.stability_factor;
  result.sdde_stable = result.spread_sdde <= params.stability_factor;
  result.chain_within_fit = true;
  result.sdde_within_fit = true;
  for (const auto& arm : result.arms) {
    for (double m4 : arm.chain.moments) {
      if (m4 > params.excess_factor * result.pooled_chain * arm.chain.initial_term) {
        result.chain_within_fit = false;
      }
    }
    for (double m2 : arm.sdde.second_moments) {
      if (m2 > params.excess_factor * result.pooled_sdde * arm.sdde.initial_term) {
        result.sdde_within_fit = false;
      }
    }
  }
  return result;
}

nlohmann::json MomentSuiteResult::to_json() const {
  nlohmann::json arms_json = nlohmann::json::array();
  for (const auto& a : arms) {
    arms_json.push_back({{"scale", a.scale},
                         {"chain_constant", a.chain.fitted_constant},
                         {"chain_initial_term", a.chain.initial_term},
                         {"sdde_constant", a.sdde.fitted_constant},
                         {"sdde_initial_term", a.sdde.initial_term},
                         {"sdde_displacement_constant", a.sdde.displacement_constant},
                         {"sdde_displacement_slope", a.sdde.displacement_slope},
                         {"sdde_displacement_monotone", a.sdde.monotone}});
  }
  return {{"arms", arms_json},
          {"pooled_chain", pooled_chain},
          {"pooled_sdde", pooled_sdde},
          {"spread_chain", spread_chain},
          {"spread_sdde", spread_sdde},
          {"chain_stable", chain_stable},
          {"sdde_stable", sdde_stable},
          {"chain_within_fit", chain_within_fit},
          {"sdde_within_fit", sdde_within_fit},
          {"finite", finite},
          {"passed", passed()}};
}

void MomentSuiteResult::write_csv(std::ostream& os) const {
  os << "scale,step,chain_m4,chain_ratio,sdde_m2,sdde_ratio,sdde_displacement\n";
  for (const auto& a : arms) {
    for (std::size_t c = 0; c < a.chain.steps.size(); ++c) {
      os << format_double(a.scale) << ',' << a.chain.steps[c] << ','
         << format_double(a.chain.moments[c]) << ','
         << format_double(a.chain.moments[c] / a.chain.initial_term) << ','
         << format_double(a.sdde.second_moments[c]) << ','
         << format_double(a.sdde.second_moments[c] / a.sdde.initial_term) << ','
         << format_double(a.sdde.displacement_moments[c]) << '\n';
    }
  }
}

}  // namespace dqnsdde
