"""Command-line entry point: solve / continue / verify / certify / export.

Exit codes: 0 success, 2 configuration error, 3 solver failure (partial
outputs are still written), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import spaces
from .config import RunConfig, load_config
from .errors import (
    BubbleError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    GeometryError,
    InconsistencyError,
    NoConvergenceError,
    StateInvalidError,
)
from .geometry import (
    BubbleGeometry,
    sample_fields,
    surface_mesh,
    write_fields_csv,
    write_mesh,
    write_profile_csv,
)
from .solver import (
    certify_bifurcation,
    continue_branch,
    newton_solve,
    read_branch_csv,
    write_branch_csv,
)
from .spectral import SpectralFunction

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bubble", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--N", type=int, help="override discretization.N")
        p.add_argument("--seed", type=int, help="override the random-suite seed")
        p.add_argument("--out", help="override output.dir")

    p_solve = sub.add_parser("solve", help="one Newton solve at fixed gravity")
    common(p_solve)
    p_solve.add_argument("--g", type=float, default=0.0, help="gravity value")

    p_cont = sub.add_parser("continue", help="continuation from g = 0")
    common(p_cont)
    p_cont.add_argument("--g-max", type=float, help="override continuation.g_max")
    p_cont.add_argument("--steps", type=int, help="override continuation.steps")

    p_cert = sub.add_parser("certify", help="certify the bifurcation structure")
    common(p_cert)

    p_verify = sub.add_parser("verify", help="run inequality verification suites")
    common(p_verify)
    p_verify.add_argument(
        "--suite",
        default="all",
        choices=["hardy", "algebra", "embedding", "composition", "norms", "all"],
    )
    p_verify.add_argument("--samples", type=int, help="samples per suite")

    p_export = sub.add_parser("export", help="export geometry from a branch file")
    common(p_export)
    p_export.add_argument("--branch", required=True, help="branch CSV produced by continue")
    p_export.add_argument("--index", type=int, required=True, help="row index into the branch")
    p_export.add_argument("--mesh", help="write a v/f mesh here")
    p_export.add_argument("--profile", help="write the zeta,lambda,dlambda profile here")
    p_export.add_argument("--fields", help="points CSV (x,y,z) to sample fields at")
    p_export.add_argument("--fields-out", help="output CSV for sampled fields")
    p_export.add_argument("--mesh-size", type=int, default=64, help="mesh resolution")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {}
    if args.N is not None:
        overrides["discretization.N"] = args.N
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output.dir"] = args.out
    if getattr(args, "g_max", None) is not None:
        overrides["continuation.g_max"] = args.g_max
    if getattr(args, "steps", None) is not None:
        overrides["continuation.steps"] = args.steps
    return load_config(args.config, overrides)


def _json_dump(payload: dict, path: Path):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _cmd_solve(args) -> int:
    config = _config_from_args(args)
    problem = config.build_problem()
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    point = newton_solve(problem, args.g, options=config.solver_options())
    path = out_dir / "solution.csv"
    write_branch_csv(path, [point], problem.degree, config.config_hash())
    print(
        f"solved g={point.g:.6g}: alpha={point.alpha:.12g} "
        f"residual={point.residual_norm:.3g} iters={point.newton_iters} -> {path}"
    )
    return EXIT_OK


def _cmd_continue(args) -> int:
    config = _config_from_args(args)
    problem = config.build_problem()
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    result = continue_branch(
        problem, config.g_max, config.steps, options=config.solver_options()
    )
    path = out_dir / "branch.csv"
    write_branch_csv(path, result.points, problem.degree, config.config_hash())
    print(f"branch: {len(result.points)} points -> {path}")
    if result.halted:
        print(f"halted early: {result.halt_reason}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_certify(args) -> int:
    config = _config_from_args(args)
    problem = config.build_problem()
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report = certify_bifurcation(
        problem,
        options=config.solver_options(),
        g_max=config.g_max,
        steps=config.steps,
    )
    payload = report.to_json_dict()
    payload["config_hash"] = config.config_hash()
    path = out_dir / "diagnostics.json"
    _json_dump(payload, path)
    print(
        f"certified: kernel_angle={report.kernel_angle:.3g} "
        f"transversality={report.transversality_value:.12g} "
        f"(formula {report.transversality_formula:.12g}) -> {path}"
    )
    return EXIT_OK


def _verify_reports(suite: str, seed: int, samples: int | None):
    def n(default):
        return default if samples is None else samples

    if suite in ("hardy", "all"):
        yield spaces.verify_hardy_log(seed=seed, count=n(50))
        for alpha in (0.5, 1.0, 2.0):
            yield spaces.verify_hardy_power(alpha, seed=seed, count=n(50))
    if suite in ("algebra", "all"):
        for k in (2, 3):
            yield spaces.verify_algebra(k, sample_count=n(100), seed=seed)
    if suite in ("embedding", "all"):
        for k in (2, 3, 4):
            yield spaces.verify_embedding_chain(k, sample_count=n(200), seed=seed)
    if suite in ("composition", "all"):
        for fmap in (spaces.IDENTITY_MAP, spaces.SQUARE_MAP, spaces.RECIPROCAL_MAP):
            yield spaces.verify_composition_bound(fmap, 2, sample_count=n(50), seed=seed)
    if suite in ("norms", "all"):
        yield spaces.verify_norm_equivalence(sample_count=n(200), seed=seed)


def _cmd_verify(args) -> int:
    config = _config_from_args(args)
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    all_passed = True
    for report in _verify_reports(args.suite, config.seed, args.samples):
        payload = report.to_json_dict()
        payload["config_hash"] = config.config_hash()
        path = out_dir / f"verify_{report.name}.json"
        _json_dump(payload, path)
        stated = "none" if report.stated_constant is None else f"{report.stated_constant:.6g}"
        print(
            f"{report.name}: {'pass' if report.passed else 'FAIL'} "
            f"worst={report.worst_ratio:.6g} constant={stated} -> {path}"
        )
        all_passed = all_passed and report.passed
    return EXIT_OK if all_passed else EXIT_SOLVER


def _cmd_export(args) -> int:
    config = _config_from_args(args)
    problem = config.build_problem()
    config_hash, header, rows = read_branch_csv(args.branch)
    if not 0 <= args.index < len(rows):
        raise ConfigurationError(
            f"--index {args.index} outside the branch ({len(rows)} rows)"
        )
    row = dict(zip(header, rows[args.index]))
    coeffs = [row[name] for name in header if name.startswith("u_coeff_")]
    u = SpectralFunction(np.array(coeffs))
    lam = u.padded(max(u.degree, 2)) + SpectralFunction.constant(
        row["R_alpha"], degree=max(u.degree, 2)
    )
    geometry = BubbleGeometry(
        lam=lam,
        g=row["g"],
        alpha=row["alpha"],
        params=config.physical_params(g=row["g"]),
        eos=problem.eos,
    )
    stamp = config.config_hash()
    wrote = []
    if args.mesh:
        mesh = surface_mesh(geometry, args.mesh_size, args.mesh_size)
        write_mesh(mesh, args.mesh, config_hash=stamp)
        wrote.append(args.mesh)
    if args.profile:
        write_profile_csv(geometry, args.profile, config_hash=stamp)
        wrote.append(args.profile)
    if args.fields:
        pts = np.loadtxt(args.fields, delimiter=",", skiprows=1, ndmin=2)
        samples = sample_fields(geometry, pts[:, :3])
        target = args.fields_out or str(config.out_dir / "fields.csv")
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        write_fields_csv(samples, target, config_hash=stamp)
        wrote.append(target)
    if not wrote:
        raise ConfigurationError("export: nothing to write (pass --mesh/--profile/--fields)")
    print("exported: " + ", ".join(str(w) for w in wrote))
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "continue": _cmd_continue,
    "certify": _cmd_certify,
    "verify": _cmd_verify,
    "export": _cmd_export,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, DomainError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        NoConvergenceError,
        ConvergenceError,
        StateInvalidError,
        InconsistencyError,
        GeometryError,
        BubbleError,
    ) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
