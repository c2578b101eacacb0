#include "dqnsdde/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dqnsdde {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::vector<std::string> split(const std::string& text, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + sep.size();
  }
  return out;
}

// Reads fields of one JSON object, recording type errors and unknown keys.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (!j_.is_object()) {
      problems_.push_back(path_ + ": expected an object");
      valid_ = false;
    }
  }

  ~Section() {
    if (!valid_) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) problems_.push_back(where(key) + ": unknown key");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return valid_ && j_.contains(key);
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) return mismatch(key, "a number", fallback);
    return v.get<double>();
  }

  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) return mismatch(key, "an integer", fallback);
    return v.get<long>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      return mismatch(key, "a non-negative integer", fallback);
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) return mismatch(key, "true or false", fallback);
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) return mismatch(key, "a string", fallback);
    return v.get<std::string>();
  }

  template <typename T>
  std::vector<T> list(const std::string& key, const std::vector<T>& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) return mismatch(key, "an array", fallback);
    std::vector<T> out;
    for (const auto& item : v) {
      const bool ok = std::is_integral_v<T> ? item.is_number_integer() : item.is_number();
      if (!ok) return mismatch(key, std::is_integral_v<T> ? "an array of integers" : "an array of numbers", fallback);
      out.push_back(item.get<T>());
    }
    return out;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool valid() const { return valid_; }

 private:
  template <typename T>
  T mismatch(const std::string& key, const char* expected, T fallback) {
    problems_.push_back(where(key) + ": expected " + expected);
    return fallback;
  }

  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
  bool valid_ = true;
};

const nlohmann::json& empty_object() {
  static const nlohmann::json e = nlohmann::json::object();
  return e;
}

const nlohmann::json& child(Section& parent, const std::string& key) {
  return parent.has(key) ? parent.raw(key) : empty_object();
}

void collect(std::vector<std::string>& problems, const std::string& prefix,
             const std::string& joined) {
  for (const auto& p : split(joined, "; ")) problems.push_back(prefix + p);
}

RewardNoise parse_reward_noise(const std::string& s, std::vector<std::string>& problems) {
  if (s == "diagonal") return RewardNoise::Diagonal;
  if (s == "rank_one") return RewardNoise::RankOne;
  problems.push_back("algo.reward_noise: expected \"diagonal\" or \"rank_one\", got \"" + s + "\"");
  return RewardNoise::Diagonal;
}

DiffusionSampling parse_sampling(const std::string& s, std::vector<std::string>& problems) {
  if (s == "factor") return DiffusionSampling::Factor;
  if (s == "symmetric_sqrt") return DiffusionSampling::SymmetricSqrt;
  problems.push_back("sdde.sampling: expected \"factor\" or \"symmetric_sqrt\", got \"" + s + "\"");
  return DiffusionSampling::Factor;
}

const char* reward_noise_name(RewardNoise r) {
  return r == RewardNoise::Diagonal ? "diagonal" : "rank_one";
}

const char* sampling_name(DiffusionSampling s) {
  return s == DiffusionSampling::Factor ? "factor" : "symmetric_sqrt";
}

MdpSpec default_mdp() {
  MdpSpec m;
  m.n_states = 3;
  m.n_actions = 2;
  m.gamma = 0.9;
  m.p = {0.7, 0.2, 0.1, 0.1, 0.6, 0.3, 0.3, 0.4, 0.3, 0.2, 0.2, 0.6, 0.5, 0.0, 0.5, 0.1, 0.1, 0.8};
  m.R = {1.0, 0.0, -0.5, 0.5, 0.2, -1.0};
  m.V = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  return m;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems, "\n")), problems_(std::move(problems)) {}

QNetwork ExperimentConfig::make_network() const {
  if (network.degenerate) return QNetwork::degenerate(mdp.n_states, mdp.n_actions, network.hidden);
  return QNetwork(mdp.n_states, mdp.n_actions, network.hidden, network.bound_C);
}

Model ExperimentConfig::make_model() const {
  const std::vector<double> q =
      replay.mode == ReplayModel::Mode::Idealized ? replay.q : ReplayModel::uniform(mdp).q;
  return Model(mdp, make_network(), q);
}

ParamVector ExperimentConfig::theta0(const QNetwork& net) const {
  if (theta0_kind == "zero") return ParamVector::Zero(net.param_count());
  if (theta0_kind == "values") {
    return Eigen::Map<const ParamVector>(theta0_values.data(), static_cast<Eigen::Index>(theta0_values.size()));
  }
  return net.init_params(network.init_stddev, network.init_seed);
}

std::vector<long> ExperimentConfig::resolved_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  return {0, algo.T};
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json theta0_json;
  if (theta0_kind == "values") {
    theta0_json = theta0_values;
  } else {
    theta0_json = theta0_kind;
  }
  const auto& rs = rate_sweep;
  const auto& vs = variance_study;
  const auto& ms = moment_suite;
  return {
      {"seed", seed},
      {"mdp", mdp_to_json(mdp)},
      {"replay", replay_to_json(replay, mdp)},
      {"network",
       {{"hidden", network.hidden},
        {"bound_C", network.bound_C},
        {"init", {{"dist", "normal"}, {"stddev", network.init_stddev}, {"seed", network.init_seed}}},
        {"degenerate", network.degenerate}}},
      {"theta0", theta0_json},
      {"algo",
       {{"eta", algo.eta},
        {"delta", algo.delta},
        {"m", algo.m},
        {"T", algo.T},
        {"H", algo.H},
        {"reward_noise", reward_noise_name(algo.reward_noise)}}},
      {"sdde",
       {{"rho", sdde.rho},
        {"sampling", sampling_name(sdde.sampling)},
        {"sigma_cache_tolerance", sdde.sigma_cache_tolerance}}},
      {"run", {{"n_traj", n_traj}, {"checkpoints", resolved_checkpoints()}, {"threads", threads}}},
      {"gate",
       {{"mode", gate_mode == GateMode::Theorem ? "theorem" : "report"},
        {"n_pairs", gate_pairs},
        {"radius", gate_radius},
        {"safety", gate_safety}}},
      {"w1", {{"n_proj", n_proj}, {"assignment_cap", assignment_cap}, {"projected_coords", projected_coords}}},
      {"rate_sweep",
       {{"etas", rs.etas},
        {"delta", rs.delta},
        {"m", rs.m},
        {"eta0", rs.eta0},
        {"T0", rs.T0},
        {"n_traj", rs.n_traj}}},
      {"variance_study",
       {{"m_values", vs.m_values},
        {"eta", vs.eta},
        {"delta", vs.delta},
        {"T", vs.T},
        {"checkpoints", vs.checkpoints},
        {"n_traj", vs.n_traj},
        {"run_scalar", vs.run_scalar},
        {"scalar",
         {{"alpha", vs.scalar.alpha},
          {"beta", vs.scalar.beta},
          {"c", vs.scalar.c},
          {"eta", vs.scalar.eta},
          {"T", vs.scalar.T},
          {"stationary_from", vs.scalar.stationary_from},
          {"n_traj", vs.scalar.n_traj}}}}},
      {"moment_suite",
       {{"scales", ms.scales},
        {"eta", ms.eta},
        {"delta", ms.delta},
        {"m", ms.m},
        {"T", ms.T},
        {"n_traj", ms.n_traj},
        {"stability_factor", ms.stability_factor},
        {"excess_factor", ms.excess_factor}}},
      {"generator_gap",
       {{"etas", generator_gap.etas},
        {"n_mc", generator_gap.n_mc},
        {"n_points", generator_gap.n_points},
        {"probe_scale", generator_gap.probe_scale},
        {"test_function", generator_gap.test_function}}},
  };
}

void apply_overrides(ExperimentConfig& cfg, const std::uint64_t* seed, const int* threads) {
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  cfg.algo.threads = cfg.threads;
  cfg.sdde.threads = cfg.threads;

  auto& rs = cfg.rate_sweep;
  rs.seed = derive_seed(cfg.seed, "rate-sweep");
  rs.threads = cfg.threads;
  rs.rho = cfg.sdde.rho;
  rs.sampling = cfg.sdde.sampling;
  rs.reward_noise = cfg.algo.reward_noise;
  rs.n_proj = cfg.n_proj;
  rs.assignment_cap = cfg.assignment_cap;
  rs.projected_coords = cfg.projected_coords;
  rs.gate_pairs = cfg.gate_pairs;
  rs.gate_radius = cfg.gate_radius;
  rs.gate_safety = cfg.gate_safety;

  auto& vs = cfg.variance_study;
  vs.seed = derive_seed(cfg.seed, "variance-study");
  vs.threads = cfg.threads;
  vs.rho = cfg.sdde.rho;
  vs.scalar.rho = cfg.sdde.rho;
  vs.sampling = cfg.sdde.sampling;
  vs.reward_noise = cfg.algo.reward_noise;

  auto& ms = cfg.moment_suite;
  ms.seed = derive_seed(cfg.seed, "moment-suite");
  ms.threads = cfg.threads;
  ms.rho = cfg.sdde.rho;
  ms.sampling = cfg.sdde.sampling;
  ms.reward_noise = cfg.algo.reward_noise;
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                  bool enforce_gate) {
  std::vector<std::string> problems;
  ExperimentConfig cfg;
  {
    Section top(j, "", problems);
    if (!top.valid()) throw ConfigError(problems);
    cfg.seed = top.seed("seed", 0);

    // MDP, inline or from a file.
    cfg.mdp = default_mdp();
    try {
      if (top.has("mdp") && top.has("mdp_file")) {
        problems.push_back("give either mdp or mdp_file, not both");
      } else if (top.has("mdp")) {
        cfg.mdp = mdp_from_json(top.raw("mdp"));
      } else if (top.has("mdp_file")) {
        const auto& f = top.raw("mdp_file");
        if (!f.is_string()) {
          problems.push_back("mdp_file: expected a string");
        } else {
          std::filesystem::path p = f.get<std::string>();
          if (p.is_relative()) p = base_dir / p;
          cfg.mdp = mdp_from_json(read_json_file(p));
        }
      }
    } catch (const ConfigError& e) {
      for (const auto& p : e.problems()) problems.push_back(p);
    } catch (const std::exception& e) {
      problems.push_back(std::string("mdp: ") + e.what());
    }
    const auto mdp_report = validate_mdp(cfg.mdp);
    for (const auto& f : mdp_report.failures) problems.push_back("mdp: " + f);

    try {
      cfg.replay = top.has("replay") ? replay_from_json(top.raw("replay"), cfg.mdp)
                                     : ReplayModel::uniform(cfg.mdp);
    } catch (const std::exception& e) {
      problems.push_back(std::string("replay: ") + e.what());
      cfg.replay = ReplayModel::uniform(cfg.mdp);
    }
    if (mdp_report.ok()) {
      for (const auto& f : validate_replay(cfg.mdp, cfg.replay).failures) problems.push_back("replay: " + f);
    }

    {
      Section net(child(top, "network"), "network", problems);
      cfg.network.hidden = net.list<int>("hidden", cfg.network.hidden);
      cfg.network.bound_C = net.number("bound_C", cfg.network.bound_C);
      cfg.network.degenerate = net.boolean("degenerate", false);
      Section init(child(net, "init"), "network.init", problems);
      const std::string dist = init.text("dist", "normal");
      if (dist != "normal") problems.push_back("network.init.dist: only \"normal\" is supported");
      cfg.network.init_stddev = init.number("stddev", cfg.network.init_stddev);
      cfg.network.init_seed = init.seed("seed", 0);
      for (int h : cfg.network.hidden) {
        if (h < 1) problems.push_back("network.hidden: layer widths must be positive");
      }
      if (!(cfg.network.bound_C > 0.0)) problems.push_back("network.bound_C must be positive");
      if (!(cfg.network.init_stddev >= 0.0)) problems.push_back("network.init.stddev must be non-negative");
    }

    if (top.has("theta0")) {
      const auto& t = top.raw("theta0");
      if (t.is_string() && (t == "init" || t == "zero")) {
        cfg.theta0_kind = t.get<std::string>();
      } else if (t.is_array()) {
        cfg.theta0_kind = "values";
        for (const auto& v : t) {
          if (!v.is_number()) {
            problems.push_back("theta0: expected numbers");
            break;
          }
          cfg.theta0_values.push_back(v.get<double>());
        }
      } else {
        problems.push_back("theta0: expected \"init\", \"zero\" or an array of numbers");
      }
    }

    {
      Section a(child(top, "algo"), "algo", problems);
      cfg.algo.eta = a.number("eta", 0.0125);
      cfg.algo.delta = a.number("delta", 0.5);
      cfg.algo.m = a.integer("m", 5);
      cfg.algo.T = a.integer("T", 80);
      cfg.algo.H = static_cast<int>(a.integer("H", 1));
      cfg.algo.reward_noise = parse_reward_noise(a.text("reward_noise", "diagonal"), problems);
      try {
        validate_algo_config(cfg.algo);
      } catch (const std::invalid_argument& e) {
        collect(problems, "algo: ", e.what());
      }
    }

    {
      Section s(child(top, "sdde"), "sdde", problems);
      cfg.sdde.rho = static_cast<int>(s.integer("rho", 20));
      cfg.sdde.sampling = parse_sampling(s.text("sampling", "factor"), problems);
      cfg.sdde.sigma_cache_tolerance = s.number("sigma_cache_tolerance", 0.0);
      cfg.sdde.eta = cfg.algo.eta;
      cfg.sdde.delta = cfg.algo.delta;
      cfg.sdde.m = cfg.algo.m;
      cfg.sdde.T = cfg.algo.T;
      try {
        validate_sdde_config(cfg.sdde);
      } catch (const std::invalid_argument& e) {
        collect(problems, "sdde: ", e.what());
      }
    }

    {
      Section r(child(top, "run"), "run", problems);
      cfg.n_traj = static_cast<int>(r.integer("n_traj", cfg.n_traj));
      cfg.threads = static_cast<int>(r.integer("threads", 1));
      if (r.has("checkpoints") && r.has("checkpoint_every")) {
        problems.push_back("run: give either checkpoints or checkpoint_every, not both");
      }
      cfg.checkpoints = r.list<long>("checkpoints", {});
      const long every = r.integer("checkpoint_every", 0);
      if (every < 0) problems.push_back("run.checkpoint_every must be positive");
      if (every > 0) {
        for (long k = 0; k <= cfg.algo.T; k += every) cfg.checkpoints.push_back(k);
      }
      if (cfg.n_traj < 1) problems.push_back("run.n_traj must be >= 1");
      if (cfg.threads < 1) problems.push_back("run.threads must be >= 1");
      if (!cfg.checkpoints.empty()) {
        try {
          validate_checkpoints(cfg.checkpoints, cfg.algo.T);
        } catch (const std::invalid_argument& e) {
          problems.push_back(std::string("run.checkpoints: ") + e.what());
        }
      }
    }

    {
      Section g(child(top, "gate"), "gate", problems);
      const std::string mode = g.text("mode", "report");
      if (mode == "theorem") {
        cfg.gate_mode = GateMode::Theorem;
      } else if (mode != "report") {
        problems.push_back("gate.mode: expected \"report\" or \"theorem\", got \"" + mode + "\"");
      }
      cfg.gate_pairs = static_cast<int>(g.integer("n_pairs", cfg.gate_pairs));
      cfg.gate_radius = g.number("radius", cfg.gate_radius);
      cfg.gate_safety = g.number("safety", cfg.gate_safety);
      if (cfg.gate_pairs < 1) problems.push_back("gate.n_pairs must be >= 1");
      if (!(cfg.gate_radius > 0.0)) problems.push_back("gate.radius must be positive");
      if (!(cfg.gate_safety >= 1.0)) problems.push_back("gate.safety must be >= 1");
    }

    {
      Section w(child(top, "w1"), "w1", problems);
      cfg.n_proj = static_cast<int>(w.integer("n_proj", cfg.n_proj));
      cfg.assignment_cap = static_cast<int>(w.integer("assignment_cap", cfg.assignment_cap));
      cfg.projected_coords = w.list<int>("projected_coords", cfg.projected_coords);
      if (cfg.n_proj < 1) problems.push_back("w1.n_proj must be >= 1");
      if (cfg.assignment_cap < 2) problems.push_back("w1.assignment_cap must be >= 2");
    }

    {
      auto& rs = cfg.rate_sweep;
      Section s(child(top, "rate_sweep"), "rate_sweep", problems);
      rs.etas = s.list<double>("etas", rs.etas);
      rs.delta = s.number("delta", rs.delta);
      rs.m = s.integer("m", rs.m);
      rs.eta0 = s.number("eta0", rs.eta0);
      rs.T0 = s.integer("T0", rs.T0);
      rs.n_traj = static_cast<int>(s.integer("n_traj", rs.n_traj));
      if (rs.etas.empty()) problems.push_back("rate_sweep.etas must not be empty");
      for (double e : rs.etas) {
        if (!(e > 0.0)) problems.push_back("rate_sweep.etas must be positive");
      }
      if (!(rs.delta > 0.0)) problems.push_back("rate_sweep.delta must be positive");
      if (rs.m < 1) problems.push_back("rate_sweep.m must be >= 1");
      if (!(rs.eta0 > 0.0) || rs.T0 < 1) problems.push_back("rate_sweep needs eta0 > 0 and T0 >= 1");
      if (rs.n_traj < 2) problems.push_back("rate_sweep.n_traj must be >= 2");
    }

    {
      auto& vs = cfg.variance_study;
      Section s(child(top, "variance_study"), "variance_study", problems);
      vs.m_values = s.list<long>("m_values", vs.m_values);
      vs.eta = s.number("eta", vs.eta);
      vs.delta = s.number("delta", vs.delta);
      vs.T = s.integer("T", vs.T);
      vs.checkpoints = s.list<long>("checkpoints", vs.checkpoints);
      vs.n_traj = static_cast<int>(s.integer("n_traj", vs.n_traj));
      vs.run_scalar = s.boolean("run_scalar", vs.run_scalar);
      Section sc(child(s, "scalar"), "variance_study.scalar", problems);
      vs.scalar.alpha = sc.number("alpha", vs.scalar.alpha);
      vs.scalar.beta = sc.number("beta", vs.scalar.beta);
      vs.scalar.c = sc.number("c", vs.scalar.c);
      vs.scalar.eta = sc.number("eta", vs.scalar.eta);
      vs.scalar.T = sc.integer("T", vs.scalar.T);
      vs.scalar.stationary_from = sc.integer("stationary_from", vs.scalar.stationary_from);
      vs.scalar.n_traj = static_cast<int>(sc.integer("n_traj", vs.scalar.n_traj));
      if (std::find(vs.m_values.begin(), vs.m_values.end(), 1L) == vs.m_values.end()) {
        problems.push_back("variance_study.m_values must include 1");
      }
      for (long m : vs.m_values) {
        if (m < 1) problems.push_back("variance_study.m_values must be >= 1");
      }
      if (!(vs.eta > 0.0) || !(vs.delta > 0.0) || vs.T < 1 || vs.n_traj < 2) {
        problems.push_back("variance_study needs eta > 0, delta > 0, T >= 1 and n_traj >= 2");
      }
      if (!(vs.scalar.alpha > 0.0) || !(std::abs(vs.scalar.beta) < vs.scalar.alpha)) {
        problems.push_back("variance_study.scalar needs alpha > 0 and |beta| < alpha");
      }
      if (!(vs.scalar.eta > 0.0) || vs.scalar.T < 1 || vs.scalar.n_traj < 2) {
        problems.push_back("variance_study.scalar needs eta > 0, T >= 1 and n_traj >= 2");
      }
    }

    {
      auto& ms = cfg.moment_suite;
      Section s(child(top, "moment_suite"), "moment_suite", problems);
      ms.scales = s.list<double>("scales", ms.scales);
      ms.eta = s.number("eta", ms.eta);
      ms.delta = s.number("delta", ms.delta);
      ms.m = s.integer("m", ms.m);
      ms.T = s.integer("T", ms.T);
      ms.n_traj = static_cast<int>(s.integer("n_traj", ms.n_traj));
      ms.stability_factor = s.number("stability_factor", ms.stability_factor);
      ms.excess_factor = s.number("excess_factor", ms.excess_factor);
      if (ms.scales.empty()) problems.push_back("moment_suite.scales must not be empty");
      if (!(ms.eta > 0.0) || !(ms.delta > 0.0) || ms.m < 1 || ms.T < 1 || ms.n_traj < 1) {
        problems.push_back("moment_suite needs eta > 0, delta > 0, m >= 1, T >= 1 and n_traj >= 1");
      }
    }

    {
      auto& gg = cfg.generator_gap;
      Section s(child(top, "generator_gap"), "generator_gap", problems);
      gg.etas = s.list<double>("etas", gg.etas);
      gg.n_mc = static_cast<int>(s.integer("n_mc", gg.n_mc));
      gg.n_points = static_cast<int>(s.integer("n_points", gg.n_points));
      gg.probe_scale = s.number("probe_scale", gg.probe_scale);
      if (s.has("test_function")) gg.test_function = s.raw("test_function");
      if (gg.etas.empty()) problems.push_back("generator_gap.etas must not be empty");
      for (double e : gg.etas) {
        if (!(e > 0.0)) problems.push_back("generator_gap.etas must be positive");
      }
      if (gg.n_mc < 1000) problems.push_back("generator_gap.n_mc must be >= 1000");
      if (gg.n_points < 1) problems.push_back("generator_gap.n_points must be >= 1");
    }
  }

  if (!problems.empty()) throw ConfigError(problems);

  // Checks that need the network.
  const QNetwork net = cfg.make_network();
  const int d = net.param_count();
  if (cfg.theta0_kind == "values" && static_cast<int>(cfg.theta0_values.size()) != d) {
    problems.push_back("theta0 has " + std::to_string(cfg.theta0_values.size()) +
                       " entries, the network has " + std::to_string(d) + " parameters");
  }
  for (int c : cfg.projected_coords) {
    if (c < 0 || c >= d) {
      problems.push_back("w1.projected_coords: " + std::to_string(c) + " is outside [0, " +
                         std::to_string(d) + ")");
    }
  }
  try {
    TestFunction::from_json(cfg.generator_gap.test_function, d);
  } catch (const std::exception& e) {
    problems.push_back(std::string("generator_gap.test_function: ") + e.what());
  }
  if (problems.empty() && enforce_gate && cfg.gate_mode == GateMode::Theorem) {
    const auto report = assumption_report(cfg.make_model(), cfg.algo.eta, cfg.algo.delta,
                                          cfg.gate_pairs, cfg.gate_radius,
                                          derive_seed(cfg.seed, "gate"), cfg.gate_safety);
    if (!report.gate_ok) {
      problems.push_back("algo.eta = " + format_double(cfg.algo.eta) +
                         " exceeds the step-size gate: limit " + format_double(report.eta_max) +
                         " set by " + report.binding);
    }
    if (!report.delta_ok) problems.push_back("algo.delta must be <= 1 in theorem mode");
  }
  if (!problems.empty()) throw ConfigError(problems);
  apply_overrides(cfg, nullptr, nullptr);
  return cfg;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open '" + path.string() + "'"});
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t offset = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, text.size()) : 0;
    std::size_t line = 1, line_start = 0;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    }
    const std::size_t line_end = text.find('\n', line_start);
    const std::string context = text.substr(line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start);
    const std::size_t column = offset - line_start + 1;
    throw ConfigError({path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                       ": parse error: " + e.what() + "\n    " + context});
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, bool enforce_gate) {
  return config_from_json(read_json_file(path), path.parent_path(), enforce_gate);
}

std::string config_hash(const nlohmann::json& resolved) {
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(fnv1a(resolved.dump())));
  return out;
}

}  // namespace dqnsdde
