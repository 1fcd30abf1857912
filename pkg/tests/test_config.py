import json

import numpy as np
import pytest

from config import RunConfig, SolverSettings, load_presets
from core.errors import ParameterError


def test_defaults_validate_for_every_command():
    cfg = RunConfig()
    for command in ("constants", "fibration", "landscape", "solve", "limit", "asymptotics", "probe"):
        cfg.validate(command)


def test_presets_load_and_validate():
    presets = load_presets()
    assert {"local_min", "mountain_pass", "asymptotics", "landscape", "probe"} <= set(presets)
    RunConfig.preset("mountain_pass").validate("solve")
    assert RunConfig.preset("mountain_pass").mode == "mp"
    sweep = RunConfig.preset("asymptotics")
    assert sweep.R_values == [4.0, 8.0, 16.0, 32.0]
    assert sweep.spacing == 0.125
    sweep.validate("asymptotics")


def test_unknown_preset():
    with pytest.raises(ParameterError, match="Preset not found"):
        RunConfig.preset("nope")


def test_unknown_keys_rejected():
    with pytest.raises(ParameterError, match="Unknown config keys"):
        RunConfig.from_dict({"radius": 3})


def test_nested_solver_settings(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"rho": 8.0, "solver": {"tol": 1e-6, "path_nodes": 11}}))
    cfg = RunConfig.load(path)
    assert cfg.rho == 8.0
    assert isinstance(cfg.solver, SolverSettings)
    assert cfg.solver.tol == 1e-6 and cfg.solver.path_nodes == 11
    assert cfg.solver.max_iter == SolverSettings().max_iter


def test_merge_skips_none_and_updates_solver():
    cfg = RunConfig(rho=2.0).merged({"rho": None, "R": 12.0, "solver": {"tol": 1e-5}})
    assert cfg.rho == 2.0
    assert cfg.R == 12.0
    assert cfg.solver.tol == 1e-5


def test_hash_tracks_content():
    a, b = RunConfig(), RunConfig()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    assert RunConfig(seed=1).config_hash() != a.config_hash()
    assert RunConfig.from_dict(a.to_dict()).config_hash() == a.config_hash()


def test_params_overrides():
    cfg = RunConfig(alpha=-0.2, rho=3.0, s=0.75)
    prm = cfg.params()
    assert (prm.alpha, prm.rho, prm.weight) == (-0.2, 3.0, 0.75)
    assert cfg.params(alpha=-0.1, rho=5.0).rho == 5.0
    assert RunConfig().params().alpha == 0.0


@pytest.mark.parametrize(
    "changes, command",
    [
        ({"p": 4.0}, "solve"),
        ({"p": 2.0}, "limit"),
        ({"rho": 0.0}, "constants"),
        ({"R": -1.0}, "constants"),
        ({"s": 0.3}, "solve"),
        ({"alpha": 0.1}, "solve"),
        ({"alpha": 0.0}, "asymptotics"),
        ({"mode": "saddle"}, "solve"),
        ({"alpha_cap": 1.0}, "solve"),
        ({"R_values": [8.0, 4.0]}, "asymptotics"),
        ({"spacing": 0.0}, "asymptotics"),
        ({"t_range": [1.0, 0.5]}, "fibration"),
    ],
)
def test_regime_guards(changes, command):
    with pytest.raises(ParameterError):
        RunConfig(**changes).validate(command)


def test_limit_accepts_mass_critical_power_and_positive_alpha():
    RunConfig(p=4.0, alpha=0.3).validate("limit")
    RunConfig(alpha=0.3).validate("fibration")


def test_energy_slack_is_in_machine_epsilons():
    assert SolverSettings().energy_slack == 64.0 * np.finfo(float).eps
