"""Noisy DQN chains, their delay-diffusion limit and W1 diagnostics."""

import json
import os

import numpy as np

from . import _core
from ._core import (
    ConfigError,
    rate_bound_shape,
    scalar_delay_stationary_variance,
    subcommands,
    w1_exact_1d,
)

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "check_assumptions",
    "coefficients",
    "load_config",
    "rate_bound_shape",
    "rerun",
    "run",
    "scalar_delay_stationary_variance",
    "simulate_dqn",
    "simulate_sdde",
    "subcommands",
    "validate_mdp",
    "w1_assignment",
    "w1_exact_1d",
    "w1_sliced",
]


def _config_text(config):
    """Returns (json text, base dir) for a path or a dict."""
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path) as f:
            return f.read(), os.path.dirname(os.path.abspath(path))
    return json.dumps(config), ""


def load_config(config):
    """Validated config with defaults filled in."""
    return json.loads(_core.resolve_config(*_config_text(config)))


def validate_mdp(mdp):
    """Problems with an MDP (a dict or a JSON file path); empty when valid."""
    text, _ = _config_text(mdp)
    return _core.validate_mdp(text)


def _ensemble(result):
    result["meta"] = json.loads(result["meta"])
    return result


def simulate_dqn(config):
    """Chain ensemble: dict with checkpoints, samples (checkpoint, traj, d) and meta."""
    return _ensemble(_core.simulate_dqn(*_config_text(config)))


def simulate_sdde(config):
    """SDDE ensemble at the config's checkpoints (in units of eta)."""
    return _ensemble(_core.simulate_sdde(*_config_text(config)))


def coefficients(config, x=None, y=None):
    """b, Sigma, beta_bar, sigma and the spectrum of sigma^2 at (x, y); theta0 by default."""
    text, base = _config_text(config)
    return _core.coefficients(text, x, y, base)


def check_assumptions(config):
    """Estimated constants and the step-size gate."""
    return json.loads(_core.check_assumptions(*_config_text(config)))


def w1_assignment(a, b, cap=512, seed=0):
    """Exact empirical W1 by optimal matching: (value, std_error, baseline)."""
    return _core.w1_assignment(np.asarray(a, dtype=float), np.asarray(b, dtype=float), cap, seed)


def w1_sliced(a, b, n_proj=64, seed=0):
    """Sliced W1 over random directions: (value, std_error, baseline)."""
    return _core.w1_sliced(np.asarray(a, dtype=float), np.asarray(b, dtype=float), n_proj, seed)


def run(name, out, config=None, seed=None, threads=None, force=False, **extra):
    """Runs a CLI subcommand; returns (exit code, stdout text, stderr text)."""
    options = {
        "config": os.fspath(config) if config is not None else "",
        "out": os.fspath(out),
        "seed": seed,
        "threads": threads,
        "force": force,
    }
    for key, value in extra.items():
        options[key] = os.fspath(value) if isinstance(value, os.PathLike) else value
    return _core.run(name, json.dumps(options))


def rerun(manifest, out):
    """Repeats the run recorded in a manifest.json into `out`."""
    return _core.rerun(os.fspath(manifest), os.fspath(out))
