// Acceptance checks 1-10. Prints one PASS/FAIL line per check.
//
//   dqnsdde_acceptance [--allow-fail 5,8] [--only 3]
//
// Exit status is 0 when every check outside the allow list passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "dqnsdde/app.hpp"
#include "dqnsdde/config.hpp"
#include "dqnsdde/experiments.hpp"

using namespace dqnsdde;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = DQNSDDE_SOURCE_DIR "/configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig default_config() {
  auto cfg = load_config(kConfigs / "default.json");
  return cfg;
}

double column_variance(const SampleMatrix& s, int k) {
  const double mu = s.col(k).mean();
  return (s.col(k).array() - mu).square().sum() / static_cast<double>(s.rows() - 1);
}

// 1. Analytic gradient against central differences.
Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const QNetwork net(3, 2, {8}, 10.0);
  Rng rng(derive_seed(1, "gradient"));
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    ParamVector th(net.param_count());
    for (int i = 0; i < th.size(); ++i) th[i] = rng.normal();
    const int s = static_cast<int>(rng.below(3)), a = static_cast<int>(rng.below(2));
    const ParamVector g = net.grad(th, s, a);
    ParamVector fd(th.size());
    for (int i = 0; i < th.size(); ++i) {
      ParamVector p = th, m = th;
      p[i] += 1e-5;
      m[i] -= 1e-5;
      fd[i] = (net.value(p, s, a) - net.value(m, s, a)) / 2e-5;
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 5.0,
          "max relative error " + fmt("%.2e", worst) + " (< 1e-6) over 100 points, d = " +
              std::to_string(net.param_count()) + ", " + fmt("%.2f", secs) + " s (< 5 s)"};
}

// 2. sigma sigma^T reconstructs Sigma + beta_bar + (delta/eta) I.
Outcome diffusion_reconstruction() {
  const auto cfg = default_config();
  const Model model = cfg.make_model();
  const int d = model.dim();
  Rng rng(derive_seed(2, "reconstruction"));
  double worst = 0.0, worst_gap = INFINITY;
  for (int k = 0; k < 100; ++k) {
    ParamVector x(d), y(d);
    for (int i = 0; i < d; ++i) {
      x[i] = 2.0 * rng.normal();
      y[i] = 2.0 * rng.normal();
    }
    const double eta = std::exp(std::log(1e-3) + rng.uniform() * std::log(1e2));
    const double delta = 0.05 + 0.95 * rng.uniform();
    const auto c = sigma_matrix(model, x, y, eta, delta);
    const Eigen::MatrixXd target = c.Sigma + c.beta_bar + (delta / eta) * Eigen::MatrixXd::Identity(d, d);
    worst = std::max(worst, (c.sigma * c.sigma.transpose() - target).norm() / target.norm());
    worst_gap = std::min(worst_gap, c.eigenvalues.minCoeff() - delta / eta);
  }
  return {worst < 1e-10 && worst_gap >= -1e-10,
          "max relative Frobenius error " + fmt("%.2e", worst) + " (< 1e-10), min(lambda_min - delta/eta) = " +
              fmt("%.2e", worst_gap) + " (>= -1e-10)"};
}

// 3. Exact drift against the Monte Carlo mean of b_n.
Outcome drift_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = default_config();
  const Model model = cfg.make_model();
  const int d = model.dim();
  Rng rng(derive_seed(3, "drift"));
  const ParamVector x = cfg.theta0(model.net());
  ParamVector y = x;
  for (int i = 0; i < d; ++i) y[i] += 0.3 * rng.normal();
  const int n = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sum2 = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    const auto t = sample_transition(model.mdp(), model.replay(), rng);
    const Eigen::VectorXd bn = sample_drift_bn(model.net(), model.mdp(), x, y, t);
    sum += bn;
    sum2 += bn.cwiseProduct(bn);
  }
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd b = exact_drift_b(model, x, y);
  double worst_z = 0.0;
  for (int k = 0; k < d; ++k) {
    const double se = std::sqrt((sum2[k] / n - mean[k] * mean[k]) / (n - 1));
    const double diff = std::abs(mean[k] - b[k]);
    worst_z = std::max(worst_z, se > 0.0 ? diff / se : (diff > 1e-14 ? INFINITY : 0.0));
  }
  const double secs = seconds_since(t0);
  return {worst_z <= 4.0 && secs < 30.0 && d <= 50,
          "max |MC mean - b| = " + fmt("%.2f", worst_z) + " standard errors (<= 4), d = " + std::to_string(d) +
              ", 1e5 samples, " + fmt("%.1f", secs) + " s (< 30 s)"};
}

// 4. With grad Q = 0 both processes are Gaussian with variance T eta delta.
Outcome degenerate_law() {
  auto cfg = default_config();
  cfg.network.degenerate = true;
  const Model model = cfg.make_model();
  const int d = model.dim();
  const int n = 10000;
  AlgoConfig ac;
  ac.eta = 0.05;
  ac.delta = 0.5;
  ac.m = 5;
  ac.T = 20;
  ac.seed = derive_seed(4, "chain");
  SddeConfig sc;
  sc.eta = ac.eta;
  sc.delta = ac.delta;
  sc.m = ac.m;
  sc.T = ac.T;
  sc.seed = derive_seed(4, "sdde");
  const ParamVector x0 = ParamVector::Zero(d);
  const SampleMatrix chain = run_dqn(model, x0, ac, n, {ac.T}).slice(0);
  const SampleMatrix sdde = run_sdde(model, x0, sc, n, {sc.T}).slice(0);
  const double expect = ac.T * ac.eta * ac.delta;
  double worst = 0.0;
  for (int k = 0; k < d; ++k) {
    worst = std::max(worst, std::abs(column_variance(chain, k) / expect - 1.0));
    worst = std::max(worst, std::abs(column_variance(sdde, k) / expect - 1.0));
  }
  Rng rng(derive_seed(4, "sliced"));
  const auto w = w1_sliced(chain, sdde, 64, rng);
  return {worst < 0.05 && w.value < 2.0 * w.baseline,
          "worst per-coordinate variance error " + fmt("%.2f%%", 100 * worst) + " (< 5%) at T eta delta = " +
              fmt("%.2f", expect) + "; sliced W1 " + fmt("%.4f", w.value) + " vs 2 x baseline " +
              fmt("%.4f", 2 * w.baseline)};
}

// 5. Rate sweep on the default model.
Outcome rate_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = default_config();
  const Model model = cfg.make_model();
  RateSweepParams p = cfg.rate_sweep;
  p.force = true;  // the estimated step-size gate excludes the whole grid
  const auto r = rate_sweep(model, cfg.theta0(model.net()), p);
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "W1 =";
  for (const auto& row : r.rows) {
    s << ' ' << fmt("%.4f", row.sliced.value) << (row.reliable ? "" : "*");
  }
  s << " (* below 2 x baseline " << fmt("%.4f", r.rows.back().sliced.baseline) << ")";
  const bool slope_ok = r.slope_defined && r.fit.slope >= 0.3 && r.fit.slope <= 0.7;
  if (r.slope_defined) {
    s << "; slope " << fmt("%.2f", r.fit.slope) << " over " << r.fit.n << " reliable points (need [0.3, 0.7])";
  } else {
    s << "; slope undefined (fewer than two reliable points)";
  }
  s << "; bound constant c = " << fmt("%.3f", r.bound_constant) << "; gate "
    << (r.gate.gate_ok ? "ok" : "forced, eta_max " + fmt("%.2e", r.gate.eta_max)) << "; " << fmt("%.0f", secs)
    << " s";
  return {slope_ok && r.bound_constant > 0.0 && secs < 1800.0, s.str()};
}

// 6. Moment bounds stable across initial conditions.
Outcome moment_bounds() {
  auto cfg = default_config();
  const auto r = moment_suite(cfg.make_model(), cfg.moment_suite);
  return {r.passed(),
          "constant spread " + fmt("%.2f", r.spread_chain) + " (chain, 4th moment) and " +
              fmt("%.2f", r.spread_sdde) + " (SDDE, 2nd moment), limit 3; all checkpoints within 10x fit: " +
              (r.chain_within_fit && r.sdde_within_fit ? "yes" : "no")};
}

// 7. Generator gap shrinks under eta halving at every probe point.
Outcome generator_consistency() {
  auto cfg = default_config();
  const Model model = cfg.make_model();
  const int d = model.dim();
  const auto& gg = cfg.generator_gap;
  const TestFunction f = TestFunction::from_json(gg.test_function, d);
  const ParamVector theta0 = cfg.theta0(model.net());
  Rng probe(derive_seed(cfg.seed, "acceptance-probes"));
  double worst = 0.0;
  int failures = 0;
  for (int k = 0; k < gg.n_points; ++k) {
    ParamVector x = theta0;
    for (int i = 0; i < d; ++i) x[i] += gg.probe_scale * probe.normal();
    const auto sweep = generator_gap_sweep(f, model, x, x, cfg.algo, gg.etas, gg.n_mc,
                                           derive_seed(cfg.seed, "acceptance-point=" + std::to_string(k)));
    for (std::size_t i = 0; i + 1 < sweep.points.size(); ++i) {
      const auto& a = sweep.points[i];
      const auto& b = sweep.points[i + 1];
      const double lo = a.gap - 2.0 * a.gap_std_error;
      const double ratio = lo > 0.0 ? (b.gap + 2.0 * b.gap_std_error) / lo : INFINITY;
      worst = std::max(worst, ratio);
      if (!(ratio < 0.7)) ++failures;
    }
  }
  return {failures == 0,
          std::to_string(gg.n_points) + " probes, quadratic f: worst gap ratio " + fmt("%.3f", worst) +
              " with 2 standard errors against the claim (< 0.7)"};
}

// 8. W1 estimators on synthetic Gaussians.
Outcome w1_estimators() {
  Rng rng(derive_seed(8, "gaussians"));
  auto gaussian = [&](int n, double shift) {
    SampleMatrix s(n, 2);
    for (int i = 0; i < n; ++i) {
      s(i, 0) = rng.normal() + shift;
      s(i, 1) = rng.normal();
    }
    return s;
  };
  const SampleMatrix A = gaussian(256, 0.0), B = gaussian(256, 1.0);
  Rng r(derive_seed(8, "sliced"));
  const auto sliced = w1_sliced(A, B, 256, r);
  const auto assign = w1_assignment(A, B);
  const double rel = std::abs(sliced.value - assign.value) / assign.value;

  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const SampleMatrix a = gaussian(8, 0.0), b = gaussian(8, 0.5);
    std::vector<int> perm{0, 1, 2, 3, 4, 5, 6, 7};
    double best = INFINITY;
    do {
      double c = 0.0;
      for (int i = 0; i < 8; ++i) c += (a.row(i) - b.row(perm[i])).norm();
      best = std::min(best, c / 8.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst = std::max(worst, std::abs(w1_assignment(a, b).value - best));
  }
  const bool brute_ok = worst < 1e-12;
  // In d = 2 the mean of |<theta, v>| over unit directions is (2/pi)|v|.
  const double c2 = 2.0 / std::numbers::pi;
  return {rel < 0.15 && brute_ok,
          "sliced " + fmt("%.4f", sliced.value) + " vs assignment " + fmt("%.4f", assign.value) + ": " +
              fmt("%.1f%%", 100 * rel) + " apart (need < 15%; sliced / (2/pi) = " + fmt("%.4f", sliced.value / c2) +
              "); n = 8 brute force max diff " + fmt("%.1e", worst) + (brute_ok ? " (exact)" : " (MISMATCH)")};
}

// 9. Scalar oracle margins and deterministic full-model tables.
Outcome variance_pipeline() {
  auto cfg = default_config();
  const Model model = cfg.make_model();
  const ParamVector theta0 = cfg.theta0(model.net());
  VarianceStudyParams p = cfg.variance_study;
  const auto a = variance_study(model, theta0, p);
  p.run_scalar = false;
  p.threads = 4;
  const auto b = variance_study(model, theta0, p);
  std::ostringstream ca, cb;
  a.write_csv(ca);
  b.write_csv(cb);
  const bool deterministic = ca.str() == cb.str();
  bool ok = deterministic && a.scalar.size() >= 2;
  std::ostringstream s;
  for (const auto& arm : a.scalar) {
    if (arm.m == 1) continue;
    const bool below = arm.empirical < a.scalar.front().empirical;
    const double rel = std::abs(arm.empirical_margin - arm.predicted_margin) / arm.predicted_margin;
    ok = ok && below && rel <= 0.10;
    s << "m = " << arm.m << ": margin " << fmt("%.4f", arm.empirical_margin) << " vs closed form "
      << fmt("%.4f", arm.predicted_margin) << " (" << fmt("%.1f%%", 100 * rel) << "); ";
  }
  s << "full-model table " << (deterministic ? "identical" : "DIFFERENT") << " across reruns and thread counts";
  return {ok, s.str()};
}

// 10. Every subcommand rerun from its manifest gives identical CSVs.
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "dqnsdde_acceptance_rerun";
  fs::remove_all(root);
  std::ostringstream out, err;
  std::vector<std::string> mismatches;
  int csv_files = 0, runs = 0;
  // estimate-w1 reads the two simulations, so they go first.
  std::vector<std::string> order = {"simulate-dqn", "simulate-sdde"};
  for (const auto& name : subcommand_names()) {
    if (name != order[0] && name != order[1]) order.push_back(name);
  }
  for (const auto& name : order) {
    RunOptions o;
    o.config = kConfigs / "smoke.json";
    o.out = root / name;
    o.force = true;
    if (name == "validate-mdp") o.mdp = kConfigs / "mdp_example.json";
    if (name == "estimate-w1") {
      o.a = root / "simulate-dqn" / "trajectories.csv";
      o.b = root / "simulate-sdde" / "trajectories.csv";
    }
    const int code = run_subcommand(name, o, out, err);
    if (code != kExitOk) {
      mismatches.push_back(name + " exited " + std::to_string(code));
      continue;
    }
    const fs::path again = root / (name + "-rerun");
    if (rerun_from_manifest(o.out / "manifest.json", again, out, err) != kExitOk) {
      mismatches.push_back(name + " rerun failed");
      continue;
    }
    ++runs;
    for (const auto& entry : fs::directory_iterator(o.out)) {
      if (entry.path().extension() != ".csv") continue;
      ++csv_files;
      auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
      };
      if (slurp(entry.path()) != slurp(again / entry.path().filename())) {
        mismatches.push_back(name + "/" + entry.path().filename().string());
      }
    }
  }
  std::string detail = std::to_string(runs) + " subcommands rerun, " + std::to_string(csv_files) +
                       " CSV files compared";
  for (const auto& m : mismatches) detail += "; " + m;
  return {mismatches.empty() && runs == static_cast<int>(subcommand_names().size()), detail};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--allow-fail" && i + 1 < argc) {
      allowed = parse_list(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else {
      std::cerr << "usage: dqnsdde_acceptance [--allow-fail 5,8] [--only 3]\n";
      return 2;
    }
  }
  const std::pair<const char*, std::function<Outcome()>> checks[] = {
      {"gradient correctness", gradient_check},
      {"diffusion reconstruction", diffusion_reconstruction},
      {"drift oracle", drift_oracle},
      {"degenerate-model law", degenerate_law},
      {"rate scaling", rate_scaling},
      {"moment bounds", moment_bounds},
      {"generator consistency", generator_consistency},
      {"W1 estimators", w1_estimators},
      {"variance study", variance_pipeline},
      {"reproducibility", reproducibility},
  };
  int unexpected = 0;
  for (int k = 1; k <= 10; ++k) {
    if (!only.empty() && !only.count(k)) continue;
    const auto& [title, run] = checks[k - 1];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool known = !o.pass && allowed.count(k);
    std::cout << "criterion " << k << ' ' << (o.pass ? "PASS" : "FAIL") << (known ? " (known)" : "") << "  "
              << title << ": " << o.detail << std::endl;
    if (!o.pass && !known) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
