#include "dqnsdde/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dqnsdde {

TestFunction TestFunction::quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& g, double c) {
  if (A.rows() != A.cols() || A.rows() != g.size()) {
    throw std::invalid_argument("quadratic test function: A must be d x d and g of length d");
  }
  TestFunction f;
  f.kind_ = Kind::Quadratic;
  f.A_ = 0.5 * (A + A.transpose());
  f.vec_ = g;
  f.scalar_ = c;
  return f;
}

TestFunction TestFunction::gaussian_bump(const Eigen::VectorXd& center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian bump width must be positive");
  TestFunction f;
  f.kind_ = Kind::GaussianBump;
  f.vec_ = center;
  f.scalar_ = width;
  return f;
}

TestFunction TestFunction::constant(int dim, double c) {
  return quadratic(Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim), c);
}

double TestFunction::value(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::Quadratic) return 0.5 * x.dot(A_ * x) + vec_.dot(x) + scalar_;
  return std::exp(-(x - vec_).squaredNorm() / (2.0 * scalar_ * scalar_));
}

Eigen::VectorXd TestFunction::gradient(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::Quadratic) return A_ * x + vec_;
  const double w2 = scalar_ * scalar_;
  return -value(x) / w2 * (x - vec_);
}

Eigen::MatrixXd TestFunction::hessian(const Eigen::VectorXd& x) const {
  if (kind_ == Kind::Quadratic) return A_;
  const double w2 = scalar_ * scalar_;
  const Eigen::VectorXd u = x - vec_;
  Eigen::MatrixXd h = u * u.transpose() / (w2 * w2);
  h.diagonal().array() -= 1.0 / w2;
  return value(x) * h;
}

nlohmann::json TestFunction::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (kind_ == Kind::GaussianBump) {
    return {{"kind", "gaussian_bump"}, {"center", vec(vec_)}, {"width", scalar_}};
  }
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < A_.rows(); ++i) rows.push_back(vec(A_.row(i).transpose()));
  return {{"kind", "quadratic"}, {"A", rows}, {"g", vec(vec_)}, {"c", scalar_}};
}

TestFunction TestFunction::from_json(const nlohmann::json& j, int dim) {
  const std::string kind = j.value("kind", "quadratic");
  auto read_vec = [&](const char* key) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    if (!j.contains(key)) return v;
    const auto values = j.at(key).get<std::vector<double>>();
    if (static_cast<int>(values.size()) != dim) {
      throw std::invalid_argument(std::string("test function field '") + key + "' needs " +
                                  std::to_string(dim) + " entries");
    }
    for (int i = 0; i < dim; ++i) v[i] = values[i];
    return v;
  };
  if (kind == "gaussian_bump") return gaussian_bump(read_vec("center"), j.value("width", 1.0));
  if (kind != "quadratic") throw std::invalid_argument("unknown test function kind '" + kind + "'");
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(dim, dim);
  if (j.contains("A") && !j.at("A").is_string()) {
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != dim) throw std::invalid_argument("quadratic A must be d x d");
    for (int r = 0; r < dim; ++r) {
      if (static_cast<int>(rows[r].size()) != dim) throw std::invalid_argument("quadratic A must be d x d");
      for (int c = 0; c < dim; ++c) A(r, c) = rows[r][c];
    }
  } else if (j.contains("A") && j.at("A").get<std::string>() != "identity") {
    throw std::invalid_argument("quadratic A must be a matrix or \"identity\"");
  }
  return quadratic(A, read_vec("g"), j.value("c", 0.0));
}

McValue generator_theta(const TestFunction& f, const Model& model, const ParamVector& x,
                        const ParamVector& target, const AlgoConfig& cfg, int n_mc, Rng& rng,
                        bool control_variate) {
  validate_algo_config(cfg);
  if (n_mc < 2) throw std::invalid_argument("generator_theta needs n_mc >= 2");
  const auto tv = target_values(model, target);
  const double fx = f.value(x);
  const Eigen::VectorXd grad = f.gradient(x);
  double shift = 0.0;
  if (control_variate) shift = -cfg.eta * local_coefficients(model, x, tv).b.dot(grad);

  const int pairs = (n_mc + 1) / 2;
  Eigen::VectorXd W(model.dim());
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Transition t = sample_transition(model.mdp(), model.replay(), rng);
    for (Eigen::Index i = 0; i < W.size(); ++i) W[i] = rng.normal();
    const ParamVector up = dqn_step_given(model, x, tv, cfg, t, W);
    t.r = 2.0 * model.mdp().reward_mean(t.s, t.a) - t.r;
    const ParamVector down = dqn_step_given(model, x, tv, cfg, t, -W);
    double v = 0.5 * (f.value(up) + f.value(down)) - fx;
    if (control_variate) v -= 0.5 * grad.dot((up - x) + (down - x));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / pairs;
  const double var = std::max(0.0, (sum_sq - pairs * mean * mean) / (pairs - 1));
  return {mean + shift, std::sqrt(var / pairs)};
}

double generator_X(const TestFunction& f, const Model& model, const ParamVector& x,
                   const ParamVector& target, double eta, double delta) {
  const auto local = local_coefficients(model, x, target_values(model, target));
  const Eigen::MatrixXd H = f.hessian(x);
  // <S S^T, H> = tr(S^T H S), cheaper than forming S S^T.
  const double sampling = (local.sampling_factor.transpose() * H * local.sampling_factor).trace();
  const double reward = (local.reward_factor.transpose() * H * local.reward_factor).trace();
  return 0.5 * (eta * sampling + eta * reward + delta * H.trace()) - local.b.dot(f.gradient(x));
}

nlohmann::json GeneratorGap::to_json() const {
  return {{"eta", eta},
          {"generator_theta", chain.value},
          {"generator_theta_stderr", chain.std_error},
          {"generator_X", sdde},
          {"gap", gap},
          {"gap_stderr", gap_std_error}};
}

GeneratorGap generator_gap(const TestFunction& f, const Model& model, const ParamVector& x,
                           const ParamVector& target, const AlgoConfig& cfg, int n_mc, Rng& rng) {
  GeneratorGap g;
  g.eta = cfg.eta;
  g.chain = generator_theta(f, model, x, target, cfg, n_mc, rng);
  g.sdde = generator_X(f, model, x, target, cfg.eta, cfg.delta);
  g.gap = std::abs(cfg.eta * g.sdde - g.chain.value);
  g.gap_std_error = g.chain.std_error;
  return g;
}

GapSweep generator_gap_sweep(const TestFunction& f, const Model& model, const ParamVector& x,
                             const ParamVector& target, AlgoConfig cfg,
                             const std::vector<double>& etas, int n_mc, std::uint64_t seed) {
  GapSweep sweep;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    cfg.eta = etas[k];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    sweep.points.push_back(generator_gap(f, model, x, target, cfg, n_mc, rng));
    const double gap = sweep.points.back().gap;
    if (k > 0) sweep.ratios.push_back(gap / sweep.points[k - 1].gap);
    if (gap > 0.0) {
      const double lx = std::log(etas[k]), ly = std::log(gap);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
  }
  if (n >= 2) sweep.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return sweep;
}

AssumptionReport gate_from_estimates(const AssumptionEstimates& est, double eta, double delta,
                                     double safety) {
  const double inf = std::numeric_limits<double>::infinity();
  AssumptionReport r;
  r.estimates = est;
  r.eta = eta;
  r.delta = delta;
  r.safety = safety;
  const double L = safety * est.L_hat;
  const double K = safety * est.K_hat;
  r.limit_delta = delta;
  r.limit_lipschitz = L > 0.0 ? 1.0 / (64.0 * L) : inf;
  r.limit_growth = (L > 0.0 && K > 0.0) ? L / (8.0 * K * K) : inf;
  r.eta_max = r.limit_delta;
  r.binding = "delta";
  if (r.limit_lipschitz < r.eta_max) {
    r.eta_max = r.limit_lipschitz;
    r.binding = "1/(64 L)";
  }
  if (r.limit_growth < r.eta_max) {
    r.eta_max = r.limit_growth;
    r.binding = "L/(8 K^2)";
  }
  r.gate_ok = eta <= r.eta_max;
  r.delta_ok = delta <= 1.0;
  return r;
}

AssumptionReport assumption_report(const Model& model, double eta, double delta, int n_pairs,
                                   double radius, std::uint64_t seed, double safety) {
  return gate_from_estimates(estimate_constants(model, n_pairs, radius, seed), eta, delta, safety);
}

nlohmann::json AssumptionReport::to_json() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"L_hat", estimates.L_hat},
          {"K_hat", estimates.K_hat},
          {"beta_max_hat", estimates.beta_max_hat},
          {"b00_norm", estimates.b00_norm},
          {"n_pairs", estimates.n_pairs},
          {"radius", estimates.radius},
          {"safety", safety},
          {"eta", eta},
          {"delta", delta},
          {"limit_delta", limit_delta},
          {"limit_lipschitz", finite_or_null(limit_lipschitz)},
          {"limit_growth", finite_or_null(limit_growth)},
          {"eta_max", eta_max},
          {"binding", binding},
          {"gate_ok", gate_ok},
          {"delta_ok", delta_ok}};
}

std::string AssumptionReport::to_string() const {
  std::ostringstream os;
  os << "L_hat = " << estimates.L_hat << ", K_hat = " << estimates.K_hat
     << ", beta_max_hat = " << estimates.beta_max_hat << " (safety factor " << safety << ")\n";
  os << "eta = " << eta << ", limit = " << eta_max << " set by " << binding << ": "
     << (gate_ok ? "pass" : "FAIL") << "\n";
  os << "delta = " << delta << " <= 1: " << (delta_ok ? "pass" : "FAIL") << "\n";
  return os.str();
}

}  // namespace dqnsdde
