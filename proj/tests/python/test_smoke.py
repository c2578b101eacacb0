import json
import pathlib

import numpy as np
import pytest

import dqnsdde

ROOT = pathlib.Path(__file__).resolve().parents[2]
SMOKE = ROOT / "configs" / "smoke.json"
MDP = ROOT / "configs" / "mdp_example.json"


def test_version_and_subcommands():
    assert dqnsdde.__version__
    assert "simulate-dqn" in dqnsdde.subcommands()


def test_config_round_trip():
    cfg = dqnsdde.load_config(SMOKE)
    assert cfg["seed"] == 11
    assert dqnsdde.load_config(cfg) == cfg


def test_bad_config_raises():
    with pytest.raises(ValueError):
        dqnsdde.load_config({"algo": {"eta": -1.0}})


def test_validate_mdp():
    assert dqnsdde.validate_mdp(MDP) == []
    mdp = json.loads(MDP.read_text())
    mdp["gamma"] = 1.5
    assert dqnsdde.validate_mdp(mdp)


def test_simulate_shapes_and_determinism():
    a = dqnsdde.simulate_dqn(SMOKE)
    b = dqnsdde.simulate_dqn(SMOKE)
    assert a["samples"].shape == (len(a["checkpoints"]), 64, 22)
    np.testing.assert_array_equal(a["samples"], b["samples"])
    s = dqnsdde.simulate_sdde(SMOKE)
    assert s["samples"].shape == a["samples"].shape
    np.testing.assert_array_equal(s["samples"][0], a["samples"][0])


def test_simulate_matches_cli(tmp_path):
    code, _, err = dqnsdde.run("simulate-dqn", tmp_path, config=SMOKE)
    assert code == 0, err
    rows = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert len(rows) > 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    code, _, err = dqnsdde.rerun(tmp_path / "manifest.json", tmp_path / "again")
    assert code == 0, err
    assert (tmp_path / "again" / "trajectories.csv").read_text() == "\n".join(rows) + "\n"


def test_coefficients_symmetric_psd():
    c = dqnsdde.coefficients(SMOKE)
    sigma = c["Sigma"]
    np.testing.assert_allclose(sigma, sigma.T, atol=1e-12)
    assert c["eigenvalues"].min() >= -1e-10
    np.testing.assert_allclose(c["sigma"], c["sigma"].T, atol=1e-10)


def test_w1_estimators():
    assert dqnsdde.w1_exact_1d([0.0, 1.0, 2.0], [0.5, 1.5, 2.5]) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(64, 2))
    value, se, _ = dqnsdde.w1_assignment(a, a[::-1])
    assert value == pytest.approx(0.0, abs=1e-12)
    value, se, _ = dqnsdde.w1_sliced(a, a + [1.0, 0.0])
    assert 0.5 < value < 1.0


def test_scalar_variance_and_bound():
    assert dqnsdde.scalar_delay_stationary_variance(2.0, 1.5, 1.0, 0.1, 5) == pytest.approx(0.07426, abs=1e-5)
    assert dqnsdde.rate_bound_shape(0.01, 0.5) > 0


def test_check_assumptions():
    rep = dqnsdde.check_assumptions(SMOKE)
    assert "eta_max" in rep
