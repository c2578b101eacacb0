#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "dqnsdde/app.hpp"
#include "dqnsdde/config.hpp"
#include "dqnsdde/experiments.hpp"

namespace py = pybind11;
using namespace dqnsdde;
using nlohmann::json;

namespace {

// Configs cross the boundary as JSON text; the Python side does the
// dict conversion.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  return config_from_json(json::parse(text), base_dir);
}

py::array_t<double> ensemble_array(const TrajectoryEnsemble& ens) {
  const auto n_ck = static_cast<py::ssize_t>(ens.checkpoints().size());
  py::array_t<double> out({n_ck, static_cast<py::ssize_t>(ens.n_traj()), static_cast<py::ssize_t>(ens.dim())});
  auto view = out.mutable_unchecked<3>();
  for (py::ssize_t c = 0; c < n_ck; ++c) {
    for (int i = 0; i < ens.n_traj(); ++i) {
      const auto row = ens.at(i, static_cast<std::size_t>(c));
      for (int k = 0; k < ens.dim(); ++k) view(c, i, k) = row[k];
    }
  }
  return out;
}

py::dict ensemble_dict(const TrajectoryEnsemble& ens) {
  py::dict d;
  d["checkpoints"] = ens.checkpoints();
  d["samples"] = ensemble_array(ens);
  d["meta"] = ens.meta.dump();
  return d;
}

SampleMatrix to_samples(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m; }

py::tuple estimate_tuple(const W1Estimate& e) { return py::make_tuple(e.value, e.std_error, e.baseline); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noisy DQN chains, their delay-diffusion limit and W1 diagnostics.";
  m.attr("__version__") = DQNSDDE_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "resolve_config",
      [](const std::string& text, const std::string& base_dir) {
        return parse_config(text, base_dir).to_json().dump();
      },
      py::arg("config_json"), py::arg("base_dir") = "",
      "Validate a config and return it with every default filled in, as JSON text.");

  m.def(
      "validate_mdp",
      [](const std::string& text) {
        try {
          return validate_mdp(mdp_from_json(json::parse(text))).failures;
        } catch (const std::invalid_argument& e) {
          return std::vector<std::string>{e.what()};
        }
      },
      py::arg("mdp_json"), "List of problems with an MDP document; empty when valid.");

  m.def(
      "simulate_dqn",
      [](const std::string& text, const std::string& base_dir) {
        const auto cfg = parse_config(text, base_dir);
        TrajectoryEnsemble ens;
        {
          py::gil_scoped_release release;
          const Model model = cfg.make_model();
          AlgoConfig ac = cfg.algo;
          // Same streams as the simulate-dqn subcommand.
          ac.seed = derive_seed(derive_seed(cfg.seed, "simulate-dqn"), "simulate-dqn");
          if (cfg.replay.mode == ReplayModel::Mode::OnlineBuffer) {
            ens = run_algorithm1(cfg.mdp, model.net(), cfg.replay, ac, cfg.theta0(model.net()), cfg.n_traj,
                                 cfg.resolved_checkpoints());
          } else {
            ens = run_dqn(model, cfg.theta0(model.net()), ac, cfg.n_traj, cfg.resolved_checkpoints());
          }
        }
        return ensemble_dict(ens);
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "simulate_sdde",
      [](const std::string& text, const std::string& base_dir) {
        const auto cfg = parse_config(text, base_dir);
        TrajectoryEnsemble ens;
        {
          py::gil_scoped_release release;
          const Model model = cfg.make_model();
          SddeConfig sc = cfg.sdde;
          sc.seed = derive_seed(derive_seed(cfg.seed, "simulate-sdde"), "simulate-sdde");
          ens = run_sdde(model, cfg.theta0(model.net()), sc, cfg.n_traj, cfg.resolved_checkpoints());
        }
        return ensemble_dict(ens);
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "coefficients",
      [](const std::string& text, std::optional<Eigen::VectorXd> x, std::optional<Eigen::VectorXd> y,
         const std::string& base_dir) {
        const auto cfg = parse_config(text, base_dir);
        const Model model = cfg.make_model();
        const Eigen::VectorXd x0 = x ? *x : cfg.theta0(model.net());
        const Eigen::VectorXd y0 = y ? *y : x0;
        if (x0.size() != model.dim() || y0.size() != model.dim()) {
          throw py::value_error("x and y need " + std::to_string(model.dim()) + " entries");
        }
        const auto c = sigma_matrix(model, x0, y0, cfg.algo.eta, cfg.algo.delta);
        py::dict d;
        d["b"] = c.b;
        d["Sigma"] = c.Sigma;
        d["beta_bar"] = c.beta_bar;
        d["sigma"] = c.sigma;
        d["eigenvalues"] = c.eigenvalues;
        return d;
      },
      py::arg("config_json"), py::arg("x") = py::none(), py::arg("y") = py::none(), py::arg("base_dir") = "");

  m.def(
      "check_assumptions",
      [](const std::string& text, const std::string& base_dir) {
        const auto cfg = parse_config(text, base_dir);
        return assumption_report(cfg.make_model(), cfg.algo.eta, cfg.algo.delta, cfg.gate_pairs,
                                 cfg.gate_radius, derive_seed(cfg.seed, "gate"), cfg.gate_safety)
            .to_json()
            .dump();
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def("w1_exact_1d", [](std::vector<double> a, std::vector<double> b) { return w1_exact_1d(a, b).value; },
        py::arg("a"), py::arg("b"));
  m.def(
      "w1_assignment",
      [](const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b, int cap,
         std::uint64_t seed) { return estimate_tuple(w1_assignment(to_samples(a), to_samples(b), cap, seed)); },
      py::arg("a"), py::arg("b"), py::arg("cap") = 512, py::arg("seed") = 0,
      "(value, std_error, baseline) of the exact empirical W1.");
  m.def(
      "w1_sliced",
      [](const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b, int n_proj,
         std::uint64_t seed) {
        Rng rng(seed);
        return estimate_tuple(w1_sliced(to_samples(a), to_samples(b), n_proj, rng));
      },
      py::arg("a"), py::arg("b"), py::arg("n_proj") = 64, py::arg("seed") = 0,
      "(value, std_error, baseline) of the sliced W1.");

  m.def("scalar_delay_stationary_variance", &scalar_delay_stationary_variance, py::arg("alpha"),
        py::arg("beta"), py::arg("c"), py::arg("eta"), py::arg("m"));
  m.def("rate_bound_shape", &rate_bound_shape, py::arg("eta"), py::arg("delta"));

  m.def("subcommands", &subcommand_names);
  m.def(
      "run",
      [](const std::string& name, const std::string& options_json) {
        const RunOptions o = RunOptions::from_json(json::parse(options_json));
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_subcommand(name, o, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("name"), py::arg("options_json"));
  m.def(
      "rerun",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out_dir) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = rerun_from_manifest(manifest, out_dir, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("manifest"), py::arg("out_dir"));
}
