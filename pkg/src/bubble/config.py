"""Run configuration: declarative TOML file, flag overrides, and the
resolved-config hash embedded in every output artifact."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .eos import EosModel, PhysicalParams, make_eos, validate_problem
from .errors import ConfigurationError
from .residual import CurvatureProblem
from .solver import SolverOptions

__all__ = ["RunConfig", "load_config", "DEFAULT_EOS"]

DEFAULT_EOS = {"kind": "isothermal", "c2": 2.0}

_DEFAULTS = {
    "seed": 1234,
    "eos": dict(DEFAULT_EOS),
    "physical": {
        "sigma": 1.0,
        "rho_ext": 1.0,
        "p_ext_star": 1.0,
        "r_max": "inf",
        "r_slab": 3.0,
    },
    "discretization": {"N": 32, "quad_pad": 8},
    "solver": {"newton_tol": 1e-11, "max_iter": 25, "damping": 8},
    "continuation": {"g_max": 0.05, "steps": 50},
    "output": {"dir": "out"},
}


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _apply_override(tree: dict, dotted: str, value):
    keys = dotted.split(".")
    node = tree
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration for one run."""

    resolved: dict
    threads: int

    @property
    def seed(self) -> int:
        return int(self.resolved["seed"])

    @property
    def degree(self) -> int:
        return int(self.resolved["discretization"]["N"])

    @property
    def quad_pad(self) -> int:
        return int(self.resolved["discretization"]["quad_pad"])

    @property
    def g_max(self) -> float:
        return float(self.resolved["continuation"]["g_max"])

    @property
    def steps(self) -> int:
        return int(self.resolved["continuation"]["steps"])

    @property
    def out_dir(self) -> Path:
        return Path(self.resolved["output"]["dir"])

    def config_hash(self) -> str:
        """Hash of the science-bearing configuration; output paths are
        excluded so relocated runs remain byte-identical."""
        hashed = {k: v for k, v in self.resolved.items() if k != "output"}
        canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def physical_params(self, g: float = 0.0) -> PhysicalParams:
        phys = self.resolved["physical"]
        r_max = phys["r_max"]
        r_max = math.inf if isinstance(r_max, str) and r_max.lower() == "inf" else float(r_max)
        return PhysicalParams(
            sigma=float(phys["sigma"]),
            rho_ext=float(phys["rho_ext"]),
            p_ext_star=float(phys["p_ext_star"]),
            r_max=r_max,
            r_slab=float(phys["r_slab"]),
            g=g,
        )

    def build_eos(self) -> EosModel:
        return make_eos(self.resolved["eos"], rho_ext=float(self.resolved["physical"]["rho_ext"]))

    def build_problem(self) -> CurvatureProblem:
        eos = self.build_eos()
        params = self.physical_params()
        validate_problem(eos, params)
        from .spectral import default_quad_order

        return CurvatureProblem(
            eos, params, degree=self.degree, quad_order=default_quad_order(self.degree, self.quad_pad)
        )

    def solver_options(self) -> SolverOptions:
        solver = self.resolved["solver"]
        return SolverOptions(
            newton_tol=float(solver["newton_tol"]),
            max_iter=int(solver["max_iter"]),
            max_halvings=int(solver["damping"]),
        )


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the TOML file, then dotted-key flag overrides."""
    tree = json.loads(json.dumps(_DEFAULTS))  # deep copy
    if path is not None:
        try:
            with open(path, "rb") as fh:
                loaded = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}")
        tree = _merge(tree, loaded)
    for dotted, value in (overrides or {}).items():
        _apply_override(tree, dotted, value)

    threads_env = os.environ.get("BUBBLE_THREADS", "0")
    try:
        threads = int(threads_env)
        if threads < 0:
            raise ValueError
    except ValueError:
        raise ConfigurationError(f"BUBBLE_THREADS must be a non-negative integer, got {threads_env!r}")

    if int(tree["discretization"]["N"]) < 4:
        raise ConfigurationError("discretization.N must be at least 4")
    if int(tree["continuation"]["steps"]) < 1:
        raise ConfigurationError("continuation.steps must be at least 1")
    return RunConfig(resolved=tree, threads=threads)
