"""Orthonormal Legendre basis, Gauss-Legendre quadrature, and the algebra
of spectral functions on [-1, 1].

A function is represented by its coefficients against the orthonormal
Legendre polynomials p_n = sqrt((2n+1)/2) * P_n, which satisfy
<p_n, p_m>_L2((-1,1)) = delta_nm.  All integrals are Gauss-Legendre sums;
the quadrature order is padded above the truncation degree so that
non-polynomial terms are over-integrated rather than aliased.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvergenceError

__all__ = [
    "QuadratureRule",
    "SpectralFunction",
    "gauss_legendre",
    "default_quad_order",
    "eval_basis",
    "basis_matrix",
    "analyze",
    "synthesize",
    "differentiate",
    "multiply",
    "reflect",
]

_NEWTON_TOL = 1e-15
_NEWTON_CAP = 100


def default_quad_order(degree: int, pad: int = 8) -> int:
    """Over-integration order for nonlinear work on degree-`degree` data.

    The curvature residual contains a 3/2 power, so exact dealiasing is
    impossible; ceil(3N/2) + pad keeps the aliasing below the Newton
    tolerance at the default settings.
    """
    return int(np.ceil(3 * degree / 2)) + pad


def _legendre_pair(order: int, x: np.ndarray):
    """Classical P_order(x) and P_{order-1}(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    if order == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, order):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p, p_prev


def _legendre_and_derivative(order: int, x: np.ndarray):
    """Classical P_order(x) and P'_order(x); valid only for |x| < 1."""
    p, p_prev = _legendre_pair(order, x)
    dp = order * (p_prev - x * p) / (1.0 - x * x)
    return p, dp


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on (-1, 1)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("nodes", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of nodal values."""
        return float(self.weights @ values)


def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule whose nodes are the roots of P_order.

    Roots are found by Newton iteration from the Tricomi asymptotic
    guesses, converged to 1e-15 with a hard 100-iteration cap, then
    symmetrized about 0.
    """
    if order < 1:
        raise ConfigurationError(f"quadrature order must be >= 1, got {order}")
    n = order
    k = np.arange(1, n + 1)
    # Tricomi initial guess, ordered from the largest root down.
    x = (1.0 - (n - 1.0) / (8.0 * n**3)) * np.cos(np.pi * (4.0 * k - 1.0) / (4.0 * n + 2.0))
    for _ in range(_NEWTON_CAP):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise ConvergenceError(f"Gauss-Legendre nodes for order {order} did not converge")
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(order=n, nodes=x, weights=w)


def eval_basis(n: int, zeta) -> np.ndarray:
    """Orthonormal Legendre polynomial p_n(zeta) = sqrt((2n+1)/2) P_n(zeta)."""
    if n < 0:
        raise ConfigurationError(f"basis degree must be >= 0, got {n}")
    zeta = np.asarray(zeta, dtype=float)
    p, _ = _legendre_pair(n, np.atleast_1d(zeta))
    out = np.sqrt((2 * n + 1) / 2.0) * p
    return out if zeta.ndim else float(out[0])


def basis_matrix(points: np.ndarray, degree: int) -> np.ndarray:
    """Matrix B[n, i] = p_n(points[i]) for n = 0..degree, one recurrence pass."""
    points = np.asarray(points, dtype=float)
    b = np.empty((degree + 1, points.size))
    b[0] = 1.0
    if degree >= 1:
        b[1] = points
    for k in range(1, degree):
        b[k + 1] = ((2 * k + 1) * points * b[k] - k * b[k - 1]) / (k + 1)
    scale = np.sqrt((2 * np.arange(degree + 1) + 1) / 2.0)
    return scale[:, None] * b


@dataclass(frozen=True)
class SpectralFunction:
    """A function on [-1, 1] held as orthonormal-Legendre coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ConfigurationError("coefficients must be a non-empty 1-d array")
        object.__setattr__(self, "coeffs", c)
        c.flags.writeable = False

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, points) -> np.ndarray:
        return synthesize(self, points)

    def padded(self, degree: int) -> "SpectralFunction":
        """Zero-pad to the given degree (no-op if already at least as long)."""
        if degree <= self.degree:
            return self
        c = np.zeros(degree + 1)
        c[: self.coeffs.size] = self.coeffs
        return SpectralFunction(c)

    def truncated(self, degree: int) -> "SpectralFunction":
        return SpectralFunction(self.coeffs[: degree + 1].copy()) if degree < self.degree else self

    def norm_l2(self) -> float:
        """L2((-1,1)) norm, equal to the coefficient 2-norm by orthonormality."""
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        n = max(self.degree, other.degree)
        return SpectralFunction(self.padded(n).coeffs + other.padded(n).coeffs)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        n = max(self.degree, other.degree)
        return SpectralFunction(self.padded(n).coeffs - other.padded(n).coeffs)

    def __mul__(self, scalar: float) -> "SpectralFunction":
        return SpectralFunction(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralFunction":
        return SpectralFunction(-self.coeffs)

    @staticmethod
    def zero(degree: int = 0) -> "SpectralFunction":
        return SpectralFunction(np.zeros(degree + 1))

    @staticmethod
    def basis(n: int, degree: int | None = None) -> "SpectralFunction":
        c = np.zeros((degree if degree is not None else n) + 1)
        c[n] = 1.0
        return SpectralFunction(c)

    @staticmethod
    def constant(value: float, degree: int = 0) -> "SpectralFunction":
        c = np.zeros(degree + 1)
        c[0] = value * np.sqrt(2.0)
        return SpectralFunction(c)


def analyze(values: np.ndarray, rule: QuadratureRule, degree: int) -> SpectralFunction:
    """Coefficients u_hat(n) = sum_i w_i f(zeta_i) p_n(zeta_i), n = 0..degree.

    Exact whenever f is a polynomial with deg f + degree <= 2*order - 1.
    """
    if rule.order < degree + 1:
        raise ConfigurationError(
            f"truncation degree {degree} exceeds quadrature capacity (order {rule.order})"
        )
    values = np.asarray(values, dtype=float)
    b = basis_matrix(rule.nodes, degree)
    return SpectralFunction(b @ (rule.weights * values))


def synthesize(u: SpectralFunction, points) -> np.ndarray:
    """Pointwise sum of u_hat(n) p_n(zeta)."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    out = u.coeffs @ basis_matrix(pts, u.degree)
    return out if np.ndim(points) else float(out[0])


def differentiate(u: SpectralFunction) -> SpectralFunction:
    """Exact derivative in coefficient space; the degree drops by one.

    Uses the classical relation P_n = (P'_{n+1} - P'_{n-1}) / (2n+1) with
    the orthonormal scaling carried explicitly.
    """
    n = u.degree
    if n == 0:
        return SpectralFunction.zero(0)
    classical = u.coeffs * np.sqrt((2 * np.arange(n + 1) + 1) / 2.0)
    b = np.zeros(n)
    acc_even = 0.0  # running sums of classical coeffs over parity classes
    acc_odd = 0.0
    for m in range(n - 1, -1, -1):
        if (n - 1 - m) % 2 == 0:
            acc_even += classical[m + 1]
            s = acc_even
        else:
            acc_odd += classical[m + 1]
            s = acc_odd
        b[m] = (2 * m + 1) * s
    return SpectralFunction(b / np.sqrt((2 * np.arange(n) + 1) / 2.0))


def multiply(u: SpectralFunction, v: SpectralFunction, rule: QuadratureRule) -> SpectralFunction:
    """Alias-free pointwise product, computed nodally and re-analyzed."""
    deg = u.degree + v.degree
    if rule.order < deg + 1:
        raise ConfigurationError(
            f"product degree {deg} needs quadrature order >= {deg + 1}, got {rule.order}"
        )
    return analyze(synthesize(u, rule.nodes) * synthesize(v, rule.nodes), rule, deg)


def reflect(u: SpectralFunction) -> SpectralFunction:
    """The pullback under zeta -> -zeta: flips the sign of odd modes."""
    signs = np.where(np.arange(u.coeffs.size) % 2 == 0, 1.0, -1.0)
    return SpectralFunction(u.coeffs * signs)
