#include "dqnsdde/app.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dqnsdde/config.hpp"
#include "dqnsdde/diagnostics.hpp"
#include "dqnsdde/dqn_chain.hpp"
#include "dqnsdde/experiments.hpp"
#include "dqnsdde/sdde.hpp"
#include "dqnsdde/wasserstein.hpp"

#ifndef DQNSDDE_VERSION
#define DQNSDDE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace dqnsdde {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string absolute_string(const fs::path& p) { return p.empty() ? "" : fs::absolute(p).lexically_normal().string(); }

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

// What a subcommand produced: files (name -> contents), a JSON summary and
// a human-readable note for stdout.
struct Outcome {
  std::map<std::string, std::string> files;
  json summary = json::object();
  std::string text;
  int exit_code = kExitOk;
};

struct Context {
  std::string name;
  RunOptions options;
  std::optional<ExperimentConfig> cfg;
  json resolved = nullptr;
  std::uint64_t seed = 0;
};

template <typename Writer>
std::string to_text(Writer&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

ExperimentConfig& need_config(Context& ctx) {
  if (!ctx.cfg) throw UsageError(ctx.name + " needs --config");
  return *ctx.cfg;
}

// ------------------------------------------------------------- subcommands

Outcome cmd_validate_mdp(Context& ctx) {
  Outcome o;
  MdpSpec mdp;
  ValidationReport report;
  if (!ctx.options.mdp.empty()) {
    try {
      mdp = mdp_from_json(read_json_file(ctx.options.mdp));
      report = validate_mdp(mdp);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      report.failures.push_back(e.what());
    }
  } else {
    mdp = need_config(ctx).mdp;
    report = validate_mdp(mdp);
  }
  o.summary = {{"valid", report.ok()}, {"failures", report.failures}};
  if (report.ok()) {
    o.summary["states"] = mdp.n_states;
    o.summary["actions"] = mdp.n_actions;
    o.summary["gamma"] = mdp.gamma;
  }
  o.files["validation.json"] = o.summary.dump(2) + "\n";
  o.text = report.ok() ? "MDP is valid\n" : "MDP is invalid: " + report.to_string() + "\n";
  o.exit_code = report.ok() ? kExitOk : kExitInvalid;
  return o;
}

Outcome cmd_simulate_dqn(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const QNetwork net = cfg.make_network();
  const ParamVector theta0 = cfg.theta0(net);
  AlgoConfig ac = cfg.algo;
  ac.seed = derive_seed(ctx.seed, "simulate-dqn");
  const auto checkpoints = cfg.resolved_checkpoints();
  TrajectoryEnsemble ens;
  if (cfg.replay.mode == ReplayModel::Mode::OnlineBuffer) {
    Algorithm1Stats stats;
    ens = run_algorithm1(cfg.mdp, net, cfg.replay, ac, theta0, cfg.n_traj, checkpoints, &stats);
    o.summary["action_counts"] = stats.action_counts;
  } else {
    const Model model = cfg.make_model();
    ens = run_dqn(model, theta0, ac, cfg.n_traj, checkpoints);
  }
  o.summary["meta"] = ens.meta;
  o.summary["n_traj"] = ens.n_traj();
  o.summary["dim"] = ens.dim();
  o.summary["checkpoints"] = ens.checkpoints();
  o.files["trajectories.csv"] = to_text([&](std::ostream& os) { ens.write_csv(os); });
  o.text = "simulated " + std::to_string(ens.n_traj()) + " chains of dimension " +
           std::to_string(ens.dim()) + "\n";
  return o;
}

Outcome cmd_simulate_sdde(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const Model model = cfg.make_model();
  SddeConfig sc = cfg.sdde;
  sc.seed = derive_seed(ctx.seed, "simulate-sdde");
  const auto ens = run_sdde(model, cfg.theta0(model.net()), sc, cfg.n_traj, cfg.resolved_checkpoints());
  o.summary["meta"] = ens.meta;
  o.summary["n_traj"] = ens.n_traj();
  o.summary["dim"] = ens.dim();
  o.summary["checkpoints"] = ens.checkpoints();
  o.files["trajectories.csv"] = to_text([&](std::ostream& os) { ens.write_csv(os); });
  o.text = "simulated " + std::to_string(ens.n_traj()) + " SDDE paths of dimension " +
           std::to_string(ens.dim()) + "\n";
  return o;
}

Outcome cmd_dump_coefficients(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const Model model = cfg.make_model();
  ParamVector x = cfg.theta0(model.net());
  ParamVector y = x;
  if (!ctx.options.points.empty()) {
    // {"x": [...], "y": [...]}; y defaults to x
    const json pj = read_json_file(ctx.options.points);
    auto to_vec = [&](const json& v) {
      const auto values = v.get<std::vector<double>>();
      if (static_cast<int>(values.size()) != model.dim()) {
        throw UsageError("point has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(model.dim()));
      }
      return ParamVector(Eigen::Map<const ParamVector>(values.data(), model.dim()));
    };
    x = to_vec(pj.at("x"));
    y = pj.contains("y") ? to_vec(pj.at("y")) : x;
  }
  const auto c = sigma_matrix(model, x, y, cfg.algo.eta, cfg.algo.delta);
  const Eigen::MatrixXd total = c.Sigma + c.beta_bar +
                                (cfg.algo.delta / cfg.algo.eta) * Eigen::MatrixXd::Identity(model.dim(), model.dim());
  o.summary = {{"dim", model.dim()},
               {"x", vector_json(x)},
               {"y", vector_json(y)},
               {"eta", c.eta},
               {"delta", c.delta},
               {"b", vector_json(c.b)},
               {"Sigma", matrix_json(c.Sigma)},
               {"beta_bar", matrix_json(c.beta_bar)},
               {"sigma", matrix_json(c.sigma)},
               {"eigenvalues", vector_json(c.eigenvalues)},
               {"trace_Sigma", c.Sigma.trace()},
               {"trace_beta_bar", c.beta_bar.trace()},
               {"reconstruction_error", (c.sigma_squared() - total).norm() / total.norm()}};
  o.files["coefficients.csv"] = to_text([&](std::ostream& os) {
    os << "matrix,row,col,value\n";
    for (Eigen::Index i = 0; i < c.b.size(); ++i) os << "b," << i << ",0," << format_double(c.b[i]) << '\n';
    const std::pair<const char*, const Eigen::MatrixXd*> mats[] = {
        {"Sigma", &c.Sigma}, {"beta_bar", &c.beta_bar}, {"sigma", &c.sigma}};
    for (const auto& [name, m] : mats) {
      for (Eigen::Index i = 0; i < m->rows(); ++i) {
        for (Eigen::Index j = 0; j < m->cols(); ++j) {
          os << name << ',' << i << ',' << j << ',' << format_double((*m)(i, j)) << '\n';
        }
      }
    }
  });
  o.text = "coefficients at (x, y) (d = " + std::to_string(model.dim()) + ")\n";
  return o;
}

TrajectoryEnsemble read_ensemble(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  return TrajectoryEnsemble::read_csv(in);
}

Outcome cmd_estimate_w1(Context& ctx) {
  const auto& opt = ctx.options;
  if (opt.a.empty() || opt.b.empty()) throw UsageError("estimate-w1 needs --a and --b");
  if (opt.method != "sliced" && opt.method != "assignment" && opt.method != "both") {
    throw UsageError("--method must be sliced, assignment or both");
  }
  const auto A = read_ensemble(opt.a);
  const auto B = read_ensemble(opt.b);
  const long step = opt.checkpoint ? *opt.checkpoint : A.checkpoints().back();
  const SampleMatrix a = A.slice(A.checkpoint_index(step));
  const SampleMatrix b = B.slice(B.checkpoint_index(step));
  const int n_proj = ctx.cfg ? ctx.cfg->n_proj : 64;
  const int cap = ctx.cfg ? ctx.cfg->assignment_cap : 512;
  Outcome o;
  o.summary = {{"checkpoint", step}, {"a", absolute_string(opt.a)}, {"b", absolute_string(opt.b)}};
  std::ostringstream text;
  if (opt.method != "assignment") {
    Rng rng(derive_seed(ctx.seed, "sliced"));
    const auto est = w1_sliced(a, b, n_proj, rng);
    o.summary["sliced"] = est.to_json();
    text << "sliced W1 = " << est.value << " +- " << est.std_error << " (baseline " << est.baseline << ")\n";
  }
  if (opt.method != "sliced") {
    const auto est = w1_assignment_subsampled(a, b, cap, derive_seed(ctx.seed, "assignment"));
    o.summary["assignment"] = est.to_json();
    o.summary["assignment_subsampled"] = a.rows() > cap || b.rows() > cap;
    text << "assignment W1 = " << est.value << " (baseline " << est.baseline << ")\n";
  }
  o.files["w1.json"] = o.summary.dump(2) + "\n";
  o.text = text.str();
  return o;
}

Outcome cmd_generator_gap(Context& ctx) {
  auto& cfg = need_config(ctx);
  const auto& gg = cfg.generator_gap;
  const Model model = cfg.make_model();
  const int d = model.dim();
  const ParamVector theta0 = cfg.theta0(model.net());

  std::vector<ParamVector> points, targets;
  json tf_json = gg.test_function;
  if (!ctx.options.points.empty()) {
    const json pj = read_json_file(ctx.options.points);
    const json& list = pj.is_array() ? pj : pj.at("points");
    auto to_vec = [&](const json& v) {
      const auto values = v.get<std::vector<double>>();
      if (static_cast<int>(values.size()) != d) {
        throw UsageError("probe point has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(d));
      }
      return ParamVector(Eigen::Map<const ParamVector>(values.data(), d));
    };
    for (const auto& p : list) points.push_back(to_vec(p));
    if (pj.is_object() && pj.contains("targets")) {
      for (const auto& p : pj.at("targets")) targets.push_back(to_vec(p));
      if (targets.size() != points.size()) throw UsageError("need one target per probe point");
    }
    if (pj.is_object() && pj.contains("test_function")) tf_json = pj.at("test_function");
  } else {
    Rng rng(derive_seed(ctx.seed, "probes"));
    for (int k = 0; k < gg.n_points; ++k) {
      ParamVector p = theta0;
      for (int i = 0; i < d; ++i) p[i] += gg.probe_scale * rng.normal();
      points.push_back(p);
    }
  }
  if (targets.empty()) targets = points;
  const TestFunction f = TestFunction::from_json(tf_json, d);

  Outcome o;
  json point_json = json::array();
  bool all_decrease = true;
  std::ostringstream csv;
  csv << "point,eta,generator_theta,generator_theta_stderr,generator_X,gap,gap_stderr\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto sweep = generator_gap_sweep(f, model, points[k], targets[k], cfg.algo, gg.etas, gg.n_mc,
                                           derive_seed(ctx.seed, "point=" + std::to_string(k)));
    json ratios = json::array(), upper = json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < sweep.points.size(); ++i) {
      const auto& g0 = sweep.points[i];
      const auto& g1 = sweep.points[i + 1];
      // Ratio with both gaps moved 2 standard errors against the claim.
      const double lo = g0.gap - 2.0 * g0.gap_std_error;
      const double hi = g1.gap + 2.0 * g1.gap_std_error;
      const double conservative = lo > 0.0 ? hi / lo : INFINITY;
      ratios.push_back(g1.gap / g0.gap);
      upper.push_back(std::isfinite(conservative) ? json(conservative) : json(nullptr));
      if (!(conservative < 0.7)) decreasing = false;
    }
    all_decrease = all_decrease && decreasing;
    json gaps = json::array();
    for (const auto& g : sweep.points) {
      gaps.push_back(g.to_json());
      csv << k << ',' << format_double(g.eta) << ',' << format_double(g.chain.value) << ','
          << format_double(g.chain.std_error) << ',' << format_double(g.sdde) << ','
          << format_double(g.gap) << ',' << format_double(g.gap_std_error) << '\n';
    }
    point_json.push_back({{"point", k},
                          {"gaps", gaps},
                          {"ratios", ratios},
                          {"ratios_upper", upper},
                          {"fitted_order", sweep.fitted_order},
                          {"decreasing", decreasing}});
  }
  o.summary = {{"test_function", f.to_json()},
               {"etas", gg.etas},
               {"n_mc", gg.n_mc},
               {"points", point_json},
               {"all_ratios_below_0_7", all_decrease},
               {"note", "pointwise one-step gap |eta A^X f - A^theta f| at the window start"}};
  o.files["generator_gap.csv"] = csv.str();
  o.text = std::string("generator gap decreases at every point: ") + (all_decrease ? "yes" : "no") + "\n";
  return o;
}

AssumptionReport config_gate(const ExperimentConfig& cfg) {
  return assumption_report(cfg.make_model(), cfg.algo.eta, cfg.algo.delta, cfg.gate_pairs,
                           cfg.gate_radius, derive_seed(cfg.seed, "gate"), cfg.gate_safety);
}

Outcome cmd_check_assumptions(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const auto report = config_gate(cfg);
  o.summary = report.to_json();
  o.files["assumptions.json"] = o.summary.dump(2) + "\n";
  o.text = report.to_string();
  return o;
}

Outcome cmd_rate_sweep(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const Model model = cfg.make_model();
  RateSweepParams p = cfg.rate_sweep;
  p.force = ctx.options.force;
  const auto result = rate_sweep(model, cfg.theta0(model.net()), p);
  o.summary = result.to_json();
  o.files["rate_sweep.csv"] = to_text([&](std::ostream& os) { result.write_csv(os); });
  o.files["rate_sweep_plot.csv"] = to_text([&](std::ostream& os) { result.write_plot_csv(os); });
  std::ostringstream text;
  for (const auto& r : result.rows) {
    text << "eta " << r.eta << ": sliced W1 " << r.sliced.value << " (baseline " << r.sliced.baseline
         << (r.reliable ? ")" : ", unreliable)") << (r.gate_ok ? "" : " [gate forced]") << '\n';
  }
  if (result.slope_defined) {
    text << "slope " << result.fit.slope << " over " << result.fit.n << " reliable points\n";
  } else {
    text << "slope undefined: fewer than two reliable points\n";
  }
  o.text = text.str();
  return o;
}

Outcome cmd_variance_study(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const Model model = cfg.make_model();
  const auto result = variance_study(model, cfg.theta0(model.net()), cfg.variance_study);
  o.summary = result.to_json();
  o.files["variance_study.csv"] = to_text([&](std::ostream& os) { result.write_csv(os); });
  o.files["variance_plot.csv"] = to_text([&](std::ostream& os) { result.write_plot_csv(os); });
  if (!result.scalar.empty()) {
    o.files["variance_scalar.csv"] = to_text([&](std::ostream& os) { result.write_scalar_csv(os); });
  }
  std::ostringstream text;
  for (const auto& a : result.scalar) {
    text << "scalar m = " << a.m << ": variance " << a.empirical << " (closed form " << a.predicted
         << ")\n";
  }
  o.text = text.str();
  return o;
}

Outcome cmd_moment_suite(Context& ctx) {
  auto& cfg = need_config(ctx);
  Outcome o;
  const Model model = cfg.make_model();
  const auto result = moment_suite(model, cfg.moment_suite);
  o.summary = result.to_json();
  o.files["moment_suite.csv"] = to_text([&](std::ostream& os) { result.write_csv(os); });
  o.text = std::string("moment suite ") + (result.passed() ? "passed" : "failed") + " (spread " +
           std::to_string(result.spread_chain) + " chain, " + std::to_string(result.spread_sdde) +
           " sdde)\n";
  return o;
}

using Handler = Outcome (*)(Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"validate-mdp", cmd_validate_mdp},     {"simulate-dqn", cmd_simulate_dqn},
      {"simulate-sdde", cmd_simulate_sdde},   {"dump-coefficients", cmd_dump_coefficients},
      {"estimate-w1", cmd_estimate_w1},       {"generator-gap", cmd_generator_gap},
      {"check-assumptions", cmd_check_assumptions}, {"rate-sweep", cmd_rate_sweep},
      {"variance-study", cmd_variance_study}, {"moment-suite", cmd_moment_suite}};
  return h;
}

// Subcommands whose manifest carries an assumption snapshot.
bool uses_model(const std::string& name) {
  return name != "validate-mdp" && name != "estimate-w1";
}

json error_record(const std::string& kind, const std::string& message) {
  return {{"type", kind}, {"message", message}};
}

int run_with_config(const std::string& name, const RunOptions& options,
                    std::optional<ExperimentConfig> cfg, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.name = name;
  ctx.options = options;
  if (cfg) {
    const std::uint64_t* seed = options.seed ? &*options.seed : nullptr;
    const int* threads = options.threads ? &*options.threads : nullptr;
    apply_overrides(*cfg, seed, threads);
    ctx.resolved = cfg->to_json();
    ctx.seed = derive_seed(cfg->seed, name);
  } else {
    ctx.seed = derive_seed(options.seed.value_or(0), name);
  }
  ctx.cfg = std::move(cfg);

  if (options.out.empty() && name == "validate-mdp") {
    // Report-only mode: nothing is written.
    try {
      const Outcome o = handlers().at(name)(ctx);
      out << o.text;
      return o.exit_code;
    } catch (const std::exception& e) {
      err << json{{"error", error_record("usage", e.what())}}.dump() << '\n';
      return kExitUsage;
    }
  }
  if (options.out.empty()) {
    err << json{{"error", error_record("usage", "--out is required")}}.dump() << '\n';
    return kExitUsage;
  }
  json manifest = {{"tool", "dqnsdde"},
                   {"version", DQNSDDE_VERSION},
                   {"subcommand", name},
                   {"arguments", options.to_json()},
                   {"master_seed", ctx.cfg ? json(ctx.cfg->seed) : json(options.seed.value_or(0))},
                   {"config_hash", config_hash(ctx.resolved)},
                   {"config", ctx.resolved},
                   {"started_at", utc_now()},
                   {"status", "running"},
                   {"outputs", json::array()}};
  const fs::path manifest_path = options.out / "manifest.json";
  try {
    fs::create_directories(options.out);
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << json{{"error", error_record("output", std::string("cannot write to '") +
                                                     options.out.string() + "': " + e.what())}}
               .dump()
        << '\n';
    return kExitUsage;
  }

  auto finish = [&](const json& status, const json& error) {
    manifest["status"] = status;
    manifest["finished_at"] = utc_now();
    if (!error.is_null()) manifest["error"] = error;
    try {
      write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << json{{"error", error_record("output", e.what())}}.dump() << '\n';
      return false;
    }
    return true;
  };

  Outcome outcome;
  try {
    if (ctx.cfg && uses_model(name)) {
      const auto gate = config_gate(*ctx.cfg);
      manifest["assumption_report"] = gate.to_json();
      if (!gate.gate_ok && ctx.cfg->gate_mode == GateMode::Theorem) {
        err << json{{"warning", {{"type", "gate"},
                                 {"message", "step-size gate fails (limit " + format_double(gate.eta_max) +
                                                 "), continuing because of --force"}}}}
                   .dump()
            << '\n';
      }
    }
    outcome = handlers().at(name)(ctx);
  } catch (const UsageError& e) {
    err << json{{"error", error_record("usage", e.what())}}.dump() << '\n';
    finish("error", error_record("usage", e.what()));
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << json{{"error", error_record("config", e.what())}}.dump() << '\n';
    finish("error", error_record("config", e.what()));
    return kExitUsage;
  } catch (const std::exception& e) {
    err << json{{"error", error_record("runtime", e.what())}}.dump() << '\n';
    finish("error", error_record("runtime", e.what()));
    return kExitRuntimeError;
  }

  outcome.files[name == "validate-mdp" ? "validation.json" : "summary.json"] = outcome.summary.dump(2) + "\n";
  json outputs = json::array();
  try {
    for (const auto& [file, content] : outcome.files) {
      write_file_atomic(options.out / file, content);
      outputs.push_back({{"file", file}, {"bytes", content.size()}, {"fnv1a", hex64(fnv1a(content))}});
    }
  } catch (const std::exception& e) {
    err << json{{"error", error_record("output", e.what())}}.dump() << '\n';
    finish("error", error_record("output", e.what()));
    return kExitUsage;
  }
  manifest["outputs"] = outputs;
  if (!finish(outcome.exit_code == kExitOk ? "ok" : "failed", nullptr)) return kExitUsage;
  out << outcome.text;
  return outcome.exit_code;
}

}  // namespace

json RunOptions::to_json() const {
  json j = {{"config", absolute_string(config)},
            {"out", absolute_string(out)},
            {"force", force},
            {"a", absolute_string(a)},
            {"b", absolute_string(b)},
            {"method", method},
            {"points", absolute_string(points)},
            {"mdp", absolute_string(mdp)}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["threads"] = threads ? json(*threads) : json(nullptr);
  j["checkpoint"] = checkpoint ? json(*checkpoint) : json(nullptr);
  return j;
}

RunOptions RunOptions::from_json(const json& j) {
  RunOptions o;
  o.config = j.value("config", "");
  o.out = j.value("out", "");
  o.force = j.value("force", false);
  o.a = j.value("a", "");
  o.b = j.value("b", "");
  o.method = j.value("method", "both");
  o.points = j.value("points", "");
  o.mdp = j.value("mdp", "");
  if (j.contains("seed") && !j.at("seed").is_null()) o.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads") && !j.at("threads").is_null()) o.threads = j.at("threads").get<int>();
  if (j.contains("checkpoint") && !j.at("checkpoint").is_null()) o.checkpoint = j.at("checkpoint").get<long>();
  return o;
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, h] : handlers()) v.push_back(name);
    return v;
  }();
  return names;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

int run_subcommand(const std::string& name, const RunOptions& options, std::ostream& out,
                   std::ostream& err) {
  if (!handlers().count(name)) {
    err << json{{"error", error_record("usage", "unknown subcommand '" + name + "'")}}.dump() << '\n';
    return kExitUsage;
  }
  std::optional<ExperimentConfig> cfg;
  if (!options.config.empty()) {
    try {
      cfg = load_config(options.config, !options.force);
    } catch (const ConfigError& e) {
      err << json{{"error", {{"type", "config"}, {"problems", e.problems()}}}}.dump() << '\n';
      return kExitUsage;
    }
  } else if (name != "validate-mdp" && name != "estimate-w1") {
    err << json{{"error", error_record("usage", name + " needs --config")}}.dump() << '\n';
    return kExitUsage;
  }
  return run_with_config(name, options, std::move(cfg), out, err);
}

int rerun_from_manifest(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out,
                        std::ostream& err) {
  json manifest;
  try {
    manifest = read_json_file(manifest_path);
  } catch (const ConfigError& e) {
    err << json{{"error", {{"type", "config"}, {"problems", e.problems()}}}}.dump() << '\n';
    return kExitUsage;
  }
  const std::string name = manifest.value("subcommand", "");
  if (!handlers().count(name)) {
    err << json{{"error", error_record("usage", "manifest names no known subcommand")}}.dump() << '\n';
    return kExitUsage;
  }
  RunOptions options = RunOptions::from_json(manifest.value("arguments", json::object()));
  options.out = out_dir;
  std::optional<ExperimentConfig> cfg;
  const json& resolved = manifest.at("config");
  if (!resolved.is_null()) {
    try {
      cfg = config_from_json(resolved, {}, !options.force);
    } catch (const ConfigError& e) {
      err << json{{"error", {{"type", "config"}, {"problems", e.problems()}}}}.dump() << '\n';
      return kExitUsage;
    }
    // The embedded config already carries the overrides.
    options.seed.reset();
  }
  return run_with_config(name, options, std::move(cfg), out, err);
}

}  // namespace dqnsdde
