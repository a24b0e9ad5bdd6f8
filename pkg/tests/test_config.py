import math

import pytest

from bubble.config import load_config
from bubble.errors import ConfigurationError


def test_defaults_without_file():
    config = load_config()
    assert config.degree == 32
    assert config.quad_pad == 8
    assert config.g_max == 0.05
    assert config.steps == 50
    assert config.seed == 1234
    params = config.physical_params()
    assert math.isinf(params.r_max)
    assert params.r_slab == 3.0


def test_file_and_overrides_precedence(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        """
seed = 7

[discretization]
N = 16

[physical]
r_max = 10.0
"""
    )
    config = load_config(path, overrides={"discretization.N": 20, "continuation.steps": 12})
    assert config.seed == 7
    assert config.degree == 20  # flag beats file
    assert config.steps == 12
    assert config.physical_params().r_max == 10.0


def test_config_hash_ignores_output_paths(tmp_path):
    a = load_config(overrides={"output.dir": str(tmp_path / "a")})
    b = load_config(overrides={"output.dir": str(tmp_path / "b")})
    c = load_config(overrides={"seed": 9})
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 64


def test_build_problem_roundtrip():
    config = load_config(overrides={"discretization.N": 12})
    problem = config.build_problem()
    assert problem.degree == 12
    assert problem.rule.order == 26  # ceil(3*12/2) + 8
    options = config.solver_options()
    assert options.newton_tol == 1e-11
    assert options.max_iter == 25


def test_invalid_values_rejected(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(overrides={"discretization.N": 2})
    with pytest.raises(ConfigurationError):
        load_config(overrides={"continuation.steps": 0})
    bad = tmp_path / "broken.toml"
    bad.write_text("not toml ][")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.toml")


def test_threads_env_validation(monkeypatch):
    monkeypatch.setenv("BUBBLE_THREADS", "4")
    assert load_config().threads == 4
    monkeypatch.setenv("BUBBLE_THREADS", "-1")
    with pytest.raises(ConfigurationError):
        load_config()
    monkeypatch.setenv("BUBBLE_THREADS", "many")
    with pytest.raises(ConfigurationError):
        load_config()
    monkeypatch.delenv("BUBBLE_THREADS")
    assert load_config().threads == 0
