"""Newton solver and predictor-corrector continuation for the discretized
curvature equation, plus the numerical certification of the bifurcation
structure at the branch origin.

The discrete system projects the residual on modes 0..N (N+1 equations)
against the unknowns alpha and the coefficients u_hat(n) for n != 1; the
kernel mode u_hat(1) is pinned to zero, which removes the vertical
translation freedom and makes the Jacobian square.  Continuation marches
the gravity parameter g away from 0 in uniform steps with a linear
extrapolation predictor, halving the step on Newton failure and halting
with the last valid g when margins would be crossed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eos import ValidityMargins, require_necessary_condition
from .errors import DomainError, NoConvergenceError, InconsistencyError, StateInvalidError
from .legendre import solve_M
from .residual import CurvatureProblem, ResidualState
from .spaces import norm_calligraphic_integral, norm_calligraphic_spectral
from .spectral import SpectralFunction

__all__ = [
    "SolverOptions",
    "BranchPoint",
    "BranchResult",
    "DiagnosticsReport",
    "newton_solve",
    "continue_branch",
    "certify_bifurcation",
    "kernel_diagnostics",
    "transversality_diagnostics",
    "quadratic_smallness_fit",
    "branch_tangent_norm",
    "elliptic_promote",
    "uniqueness_probe",
    "write_branch_csv",
    "read_branch_csv",
]


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-11
    max_iter: int = 25
    max_halvings: int = 8
    polish: bool = True


@dataclass(frozen=True)
class BranchPoint:
    """One converged solution of the discretized system at fixed g."""

    g: float
    alpha: float
    u: SpectralFunction
    r_alpha: float
    residual_norm: float
    newton_iters: int
    margins: ValidityMargins
    monotonicity_margin: float
    u_norm_h2: float


@dataclass(frozen=True)
class BranchResult:
    points: list
    halted: bool
    halt_reason: str | None

    @property
    def last_valid_g(self) -> float:
        return self.points[-1].g if self.points else math.nan


@dataclass(frozen=True)
class DiagnosticsReport:
    """Certificate of the bifurcation structure at (alpha, g, u) = (0, 0, 0)."""

    kernel_angle: float
    kernel_gap: float
    transversality_value: float
    transversality_formula: float
    quadratic_fit: float

    def to_json_dict(self) -> dict:
        return {
            "kernel_angle": self.kernel_angle,
            "kernel_gap": self.kernel_gap,
            "transversality_value": self.transversality_value,
            "transversality_formula": self.transversality_formula,
            "quadratic_fit": self.quadratic_fit,
        }


def _free_indices(degree: int) -> list:
    return [n for n in range(degree + 1) if n != 1]


def _vector_to_u(x: np.ndarray, degree: int) -> SpectralFunction:
    c = np.zeros(degree + 1)
    c[0] = x[1]
    c[2:] = x[2:]
    return SpectralFunction(c)


def _monotonicity_margin(problem: CurvatureProblem, state: ResidualState) -> float:
    """min over nodes of d/dt[t lambda(t)] = lambda + t lambda'."""
    z = problem.rule.nodes
    return float(np.min(state.lam_nodes + z * state.dlam_nodes))


def _build_point(problem, state, res_norm, iters) -> BranchPoint:
    return BranchPoint(
        g=state.g,
        alpha=state.alpha,
        u=state.u,
        r_alpha=state.r_alpha,
        residual_norm=res_norm,
        newton_iters=iters,
        margins=state.margins,
        monotonicity_margin=_monotonicity_margin(problem, state),
        u_norm_h2=norm_calligraphic_integral(state.u, 2, problem.rule),
    )


def _assemble_jacobian(problem: CurvatureProblem, state: ResidualState) -> np.ndarray:
    """Dense (N+1) x (N+1) Jacobian: column 0 is d/dalpha, the rest are the
    directional derivatives along the free basis modes."""
    degree = problem.degree
    free = _free_indices(degree)
    jac = np.empty((degree + 1, degree + 1))
    jac[:, 0] = problem.linearization_alpha(state).coeffs
    for col, n in enumerate(free, start=1):
        jac[:, col] = problem.linearization_u(state, SpectralFunction.basis(n, degree)).coeffs
    return jac


def newton_solve(
    problem: CurvatureProblem,
    g: float,
    seed_alpha: float = 0.0,
    seed_u: SpectralFunction | None = None,
    options: SolverOptions = SolverOptions(),
) -> BranchPoint:
    """Damped Newton on the pinned system at fixed g.

    Accepts a step only when it strictly reduces the coefficient-space
    residual norm, halving up to `max_halvings` times; after the tolerance
    is met one full polishing step is taken (when it helps) so downstream
    symmetry and self-convergence checks see coefficient-level accuracy.
    """
    degree = problem.degree
    if seed_u is None:
        seed_u = SpectralFunction.zero(degree)
    x = np.empty(degree + 1)
    x[0] = seed_alpha
    padded = seed_u.padded(degree).coeffs
    x[1] = padded[0]
    x[2:] = padded[2:]

    def eval_state(vec):
        # far-field candidates may overflow the EOS exponentials; the
        # resulting non-finite residual norm just rejects the step
        with np.errstate(over="ignore", invalid="ignore"):
            state = problem.state(vec[0], g, _vector_to_u(vec, degree))
            res = problem.residual(state)
        return state, res, float(np.linalg.norm(res.coeffs))

    state, res, res_norm = eval_state(x)
    trace = [(0, res_norm)]
    iters = 0
    while res_norm >= options.newton_tol:
        if iters >= options.max_iter:
            raise NoConvergenceError(
                f"Newton did not reach tol {options.newton_tol} in {iters} iterations "
                f"at g = {g} (last residual {res_norm})",
                trace=trace,
            )
        jac = _assemble_jacobian(problem, state)
        try:
            step = np.linalg.solve(jac, -res.coeffs)
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(f"singular Jacobian at g = {g}: {exc}", trace=trace)
        accepted = False
        scale = 1.0
        for _ in range(options.max_halvings + 1):
            try:
                cand_state, cand_res, cand_norm = eval_state(x + scale * step)
            except (StateInvalidError, DomainError):
                scale *= 0.5
                continue
            if math.isfinite(cand_norm) and cand_norm < res_norm:
                x = x + scale * step
                state, res, res_norm = cand_state, cand_res, cand_norm
                accepted = True
                break
            scale *= 0.5
        iters += 1
        trace.append((iters, res_norm))
        if not accepted:
            raise NoConvergenceError(
                f"residual did not decrease after {options.max_halvings} halvings "
                f"at g = {g} (residual {res_norm})",
                trace=trace,
            )

    if options.polish and res_norm >= 0.01 * options.newton_tol:
        try:
            jac = _assemble_jacobian(problem, state)
            step = np.linalg.solve(jac, -res.coeffs)
            cand_state, cand_res, cand_norm = eval_state(x + step)
            if cand_norm < res_norm:
                state, res, res_norm = cand_state, cand_res, cand_norm
                iters += 1
                trace.append((iters, res_norm))
        except (np.linalg.LinAlgError, StateInvalidError, DomainError):
            pass

    return _build_point(problem, state, res_norm, iters)


def continue_branch(
    problem: CurvatureProblem,
    g_max: float,
    steps: int,
    options: SolverOptions = SolverOptions(),
    max_step_halvings: int = 6,
) -> BranchResult:
    """March g from 0 toward g_max in `steps` uniform steps.

    The predictor extrapolates linearly from the two previous points (the
    first corrector is seeded with the trivial tangent (alpha, u) = (0, 0),
    the branch being quadratic in g).  Newton failure halves the step, at
    most `max_step_halvings` consecutive times; a converged point with a
    non-positive validity or monotonicity margin halts the march and the
    partial branch reports the last valid g.
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    origin = newton_solve(problem, 0.0, 0.0, None, options)
    points = [origin]
    if g_max == 0.0:
        return BranchResult(points=points, halted=False, halt_reason=None)

    delta = g_max / steps
    step = delta
    halvings = 0
    while (g_max - points[-1].g) * math.copysign(1.0, delta) > 1e-12 * abs(delta):
        prev = points[-1]
        remaining = g_max - prev.g
        if abs(step) > abs(remaining):
            step = remaining
        g_target = prev.g + step
        if len(points) >= 2:
            prev2 = points[-2]
            w = (g_target - prev.g) / (prev.g - prev2.g)
            seed_alpha = prev.alpha + w * (prev.alpha - prev2.alpha)
            seed_u = prev.u + w * (prev.u - prev2.u)
        else:
            seed_alpha = prev.alpha
            seed_u = prev.u
        try:
            point = newton_solve(problem, g_target, seed_alpha, seed_u, options)
        except (NoConvergenceError, StateInvalidError, DomainError) as exc:
            halvings += 1
            if halvings > max_step_halvings:
                return BranchResult(
                    points=points,
                    halted=True,
                    halt_reason=(
                        f"Newton failed at g = {g_target} after {max_step_halvings} step "
                        f"halvings ({exc}); last valid g = {prev.g}"
                    ),
                )
            step *= 0.5
            continue
        if not point.margins.ok or point.monotonicity_margin <= 0:
            bad = point.margins.failing() or "monotonicity_margin"
            return BranchResult(
                points=points,
                halted=True,
                halt_reason=(
                    f"{bad} would become non-positive at g = {g_target}; "
                    f"last valid g = {prev.g}"
                ),
            )
        points.append(point)
        halvings = 0
        step = delta
    return BranchResult(points=points, halted=False, halt_reason=None)


def kernel_diagnostics(problem: CurvatureProblem) -> tuple:
    """SVD of the u-block of the linearization at the branch origin.

    Returns (smallest a singular value, angle of its vector to the p_1 axis,
    second-smallest singular value).
    """
    degree = problem.degree
    state = problem.state(0.0, 0.0)
    block = np.empty((degree + 1, degree + 1))
    for n in range(degree + 1):
        block[:, n] = problem.linearization_u(state, SpectralFunction.basis(n, degree)).coeffs
    _, svals, vt = np.linalg.svd(block)
    kernel_vec = vt[-1]
    angle = math.acos(min(1.0, abs(float(kernel_vec[1]))))
    return float(svals[-1]), angle, float(svals[-2])


def transversality_diagnostics(problem: CurvatureProblem, h: float = 1e-4) -> tuple:
    """Mixed alpha-g derivative of the residual at the origin, extracted as
    the p_1 coefficient divided by the p_1 coefficient of zeta, compared to
    the closed form pfrak''(0) R_0^3."""
    plus = problem.linearization_g(problem.state(h, 0.0)).coeffs[1]
    minus = problem.linearization_g(problem.state(-h, 0.0)).coeffs[1]
    value = (plus - minus) / (2.0 * h) / math.sqrt(2.0 / 3.0)
    r0 = problem.state(0.0, 0.0).r_alpha
    formula = float(problem.eos.pfrak_d2(0.0)) * r0**3
    return float(value), formula


def quadratic_smallness_fit(points) -> float:
    """max of ||u(g)||_{H2} / g^2 over the outer three quarters of a branch."""
    gs = np.array([abs(p.g) for p in points])
    cutoff = gs.max() / 4.0
    ratios = [p.u_norm_h2 / p.g**2 for p in points if abs(p.g) >= cutoff and p.g != 0.0]
    if not ratios:
        raise DomainError("branch has no points beyond a quarter of its reach")
    return float(max(ratios))


def branch_tangent_norm(
    problem: CurvatureProblem, options: SolverOptions = SolverOptions(), h: float = 1e-3
) -> float:
    """H2 norm of the finite-difference branch tangent du/dg at g = 0.

    Four-point central stencil; by the branch's quadratic smallness the
    exact tangent is zero, so the returned norm measures the asymptotics.
    """
    tight = SolverOptions(
        newton_tol=min(options.newton_tol, 1e-13),
        max_iter=options.max_iter,
        max_halvings=options.max_halvings,
        polish=True,
    )
    us = {}
    for k in (-2, -1, 1, 2):
        us[k] = newton_solve(problem, k * h, 0.0, None, tight).u
    tangent = (1.0 / (12.0 * h)) * (8.0 * (us[1] - us[-1]) - (us[2] - us[-2]))
    return norm_calligraphic_integral(tangent, 2, problem.rule)


def certify_bifurcation(
    problem: CurvatureProblem,
    options: SolverOptions = SolverOptions(),
    g_max: float = 0.05,
    steps: int = 50,
    transversality_step: float = 1e-4,
) -> DiagnosticsReport:
    """Full certificate: kernel structure, transversality, and the quadratic
    smallness constant fitted on a freshly computed branch."""
    require_necessary_condition(problem.eos, problem.params)
    _, angle, gap = kernel_diagnostics(problem)
    value, formula = transversality_diagnostics(problem, transversality_step)
    result = continue_branch(problem, g_max, steps, options)
    if result.halted:
        raise NoConvergenceError(
            f"branch for the certificate halted early: {result.halt_reason}"
        )
    fit = quadratic_smallness_fit(result.points)
    return DiagnosticsReport(
        kernel_angle=angle,
        kernel_gap=gap,
        transversality_value=value,
        transversality_formula=formula,
        quadratic_fit=fit,
    )


def elliptic_promote(
    problem: CurvatureProblem,
    point: BranchPoint,
    k_target: int = 2,
    tol: float = 1e-9,
) -> tuple:
    """One bootstrap application: solve sigma(L + 2I) lambda = -Phi at the
    converged point, on an extended coefficient range, and measure the
    distance to the Newton profile in the spectral k_target-norm.

    A distance above `tol` flags a too-coarse discretization.
    """
    state = problem.state(point.alpha, point.g, point.u)
    n_ext = min(problem.degree + 16, problem.max_degree)
    phi = problem.analyze(problem.nonlinear_nodal(state), n_ext)
    promoted = solve_M(-1.0 * phi, problem.params.sigma)
    lam = point.u.padded(n_ext) + SpectralFunction.constant(point.r_alpha, degree=n_ext)
    distance = norm_calligraphic_spectral(promoted - lam, k_target, 1.0)
    if distance > tol:
        raise InconsistencyError(
            f"promoted profile is {distance} away from the Newton solution in the "
            f"spectral {k_target}-norm (tol {tol}); discretization too coarse"
        )
    return promoted, distance


def uniqueness_probe(
    problem: CurvatureProblem,
    point: BranchPoint,
    options: SolverOptions = SolverOptions(),
    radius: float = 1e-3,
    n_probes: int = 4,
    seed: int = 0,
) -> float:
    """Local dichotomy check within the Newton trust region.

    For g = 0, perturbed seeds must collapse back to the trivial branch
    (u = 0, alpha free along the branch): returns the largest final ||u||.
    For g != 0, perturbed seeds must return to the same point: returns the
    largest coefficient distance including alpha.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        bump = rng.uniform(-radius, radius, problem.degree + 1)
        bump[1] = 0.0
        seed_u = point.u + SpectralFunction(bump)
        if point.g == 0.0:
            final = _newton_solve_fixed_alpha(problem, 0.0, point.alpha, seed_u, options)
            worst = max(worst, final.norm_l2())
        else:
            alpha_seed = point.alpha + float(rng.uniform(-radius, radius))
            solved = newton_solve(problem, point.g, alpha_seed, seed_u, options)
            dist = max(
                abs(solved.alpha - point.alpha),
                float(np.max(np.abs((solved.u - point.u).coeffs))),
            )
            worst = max(worst, dist)
    return worst


def _newton_solve_fixed_alpha(
    problem: CurvatureProblem,
    g: float,
    alpha: float,
    seed_u: SpectralFunction,
    options: SolverOptions,
) -> SpectralFunction:
    """Newton on the u-block only (alpha frozen), projecting out mode 1.

    Used by the g = 0 probe, where alpha parameterizes a whole branch of
    solutions and must not be an unknown.
    """
    degree = problem.degree
    free = _free_indices(degree)
    u = seed_u.padded(degree)
    for _ in range(options.max_iter):
        state = problem.state(alpha, g, u)
        res = problem.residual(state).coeffs[free]
        if np.linalg.norm(res) < options.newton_tol:
            return u
        jac = np.empty((len(free), len(free)))
        for col, n in enumerate(free):
            jac[:, col] = problem.linearization_u_fd(
                state, SpectralFunction.basis(n, degree)
            ).coeffs[free]
        step = np.linalg.solve(jac, -res)
        c = np.array(u.coeffs)
        c[free] += step
        u = SpectralFunction(c)
    raise NoConvergenceError(f"fixed-alpha probe did not converge at g = {g}")


# --- branch persistence --------------------------------------------------------


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_branch_csv(path, points, degree: int, config_hash: str):
    """Branch table with one row per point and lossless float formatting."""
    header = [
        "g",
        "alpha",
        "R_alpha",
        "residual_norm",
        "newton_iters",
        "monotonicity_margin",
        "margin_eos",
        "u_norm_H2",
    ] + [f"u_coeff_{n}" for n in range(degree + 1)]
    lines = [f"# config_hash={config_hash}", ",".join(header)]
    for p in points:
        row = [
            _fmt(p.g),
            _fmt(p.alpha),
            _fmt(p.r_alpha),
            _fmt(p.residual_norm),
            str(p.newton_iters),
            _fmt(p.monotonicity_margin),
            _fmt(p.margins.enthalpy_margin),
            _fmt(p.u_norm_h2),
        ] + [_fmt(c) for c in p.u.padded(degree).coeffs]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_branch_csv(path) -> tuple:
    """Returns (config_hash, header list, rows as list of float lists)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    config_hash = ""
    if lines and lines[0].startswith("#"):
        meta, lines = lines[0], lines[1:]
        if "config_hash=" in meta:
            config_hash = meta.split("config_hash=", 1)[1].strip()
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return config_hash, header, rows
