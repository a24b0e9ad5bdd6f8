"""The Legendre differential operator L u = -D((1 - zeta^2) D u) and its
resolvents, applied diagonally in coefficient space.

The orthonormal Legendre polynomials are eigenfunctions, L p_n = n(n+1) p_n,
so applying L and inverting L - rI or sigma(L + 2I) never mixes modes."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SingularOperatorError
from .spectral import SpectralFunction

__all__ = ["eigenvalues", "apply_L", "solve_resolvent", "solve_M"]

_EIGENVALUE_TOL = 1e-10


def eigenvalues(degree: int) -> np.ndarray:
    """lambda_n = n(n+1) for n = 0..degree."""
    n = np.arange(degree + 1, dtype=float)
    return n * (n + 1)


def apply_L(u: SpectralFunction) -> SpectralFunction:
    """(L u)^(n) = n(n+1) u^(n), exact."""
    return SpectralFunction(eigenvalues(u.degree) * u.coeffs)


def _nearest_mode(r: float) -> tuple[int, float]:
    """Mode n minimizing |n(n+1) - r|, with the distance."""
    if r <= 0:
        return 0, abs(r)
    root = (-1.0 + math.sqrt(1.0 + 4.0 * r)) / 2.0
    best, dist = 0, abs(r)
    for n in {int(math.floor(root)), int(math.ceil(root))}:
        if n >= 0 and abs(n * (n + 1) - r) < dist:
            best, dist = n, abs(n * (n + 1) - r)
    return best, dist


def solve_resolvent(f: SpectralFunction, r: float) -> SpectralFunction:
    """Solve (L - rI) u = f exactly: u^(n) = f^(n) / (n(n+1) - r).

    Rejects shifts within 1e-10 of any eigenvalue n(n+1); the eigenvalues
    are integers so an absolute tolerance suffices.
    """
    mode, dist = _nearest_mode(r)
    if dist <= _EIGENVALUE_TOL:
        raise SingularOperatorError(
            f"shift r = {r} is within {_EIGENVALUE_TOL} of eigenvalue "
            f"{mode * (mode + 1)} (mode n = {mode})",
            mode=mode,
        )
    return SpectralFunction(f.coeffs / (eigenvalues(f.degree) - r))


def solve_M(f: SpectralFunction, sigma: float) -> SpectralFunction:
    """Solve sigma (L + 2I) u = f; never singular since -2 is not an eigenvalue."""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return SpectralFunction(f.coeffs / (sigma * (eigenvalues(f.degree) + 2.0)))
