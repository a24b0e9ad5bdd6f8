"""Legendre pseudo-spectral solver for hydrostatic compressible bubbles.

Computes the family of nearly spherical axisymmetric equilibria that
bifurcates from the exact zero-gravity spheres, and numerically certifies
the functional-analytic structure behind the construction (Hardy
inequalities, weighted-norm equivalences, kernel and transversality of
the linearized curvature operator).
"""

__version__ = "0.1.0"

from .errors import (
    BubbleError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    GeometryError,
    InconsistencyError,
    NoConvergenceError,
    RangeError,
    SingularOperatorError,
    StateInvalidError,
)
from .spectral import (
    QuadratureRule,
    SpectralFunction,
    analyze,
    basis_matrix,
    default_quad_order,
    differentiate,
    eval_basis,
    gauss_legendre,
    multiply,
    reflect,
    synthesize,
)

__all__ = [
    "BubbleError",
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "GeometryError",
    "InconsistencyError",
    "NoConvergenceError",
    "RangeError",
    "SingularOperatorError",
    "StateInvalidError",
    "QuadratureRule",
    "SpectralFunction",
    "analyze",
    "basis_matrix",
    "default_quad_order",
    "differentiate",
    "eval_basis",
    "gauss_legendre",
    "multiply",
    "reflect",
    "synthesize",
    "__version__",
]
