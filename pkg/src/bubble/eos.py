"""Barotropic equation-of-state layer.

Each law provides the pressure P(rho), the enthalpy eta(z) normalized so
eta(rho_ext) = 0, its inverse, and the composed pressure-of-enthalpy map
pfrak = P o eta^{-1} with the exact derivative identities

    pfrak'(y)  = eta^{-1}(y),
    pfrak''(y) = eta^{-1}(y) / P'(eta^{-1}(y)).

The zero-gravity sphere radius for a given enthalpy level alpha is
R_alpha = 2 sigma / (pfrak(alpha) - P_ext_star), defined on the interval
(pfrak^{-1}(P_ext_star + 2 sigma / R_max), eta_max).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, RangeError
from .spectral import QuadratureRule, SpectralFunction, differentiate, synthesize

__all__ = [
    "EosModel",
    "IsothermalEos",
    "PolytropicEos",
    "TabulatedEos",
    "make_eos",
    "PhysicalParams",
    "ValidityMargins",
    "necessary_condition_holds",
    "require_necessary_condition",
    "validate_problem",
    "alpha_lower_bound",
    "radius_of_alpha",
    "check_validity",
    "validity_margins_nodal",
]


class EosModel:
    """Common derived quantities shared by every barotropic law."""

    rho_ext: float

    # --- primitive interface implemented by subclasses -------------------
    def pressure(self, rho):
        raise NotImplementedError

    def pressure_d1(self, rho):
        raise NotImplementedError

    def pressure_inverse(self, p):
        raise NotImplementedError

    def enthalpy(self, z):
        raise NotImplementedError

    def enthalpy_inverse(self, y):
        raise NotImplementedError

    @property
    def eta_min(self) -> float:
        raise NotImplementedError

    @property
    def eta_max(self) -> float:
        raise NotImplementedError

    @property
    def pressure_max(self) -> float:
        raise NotImplementedError

    # --- derived maps ------------------------------------------------------
    def _check_enthalpy_range(self, y):
        y = np.asarray(y, dtype=float)
        if np.min(y) <= self.eta_min or np.max(y) >= self.eta_max:
            raise RangeError(
                f"enthalpy value outside range ({self.eta_min}, {self.eta_max})",
                lo=self.eta_min,
                hi=self.eta_max,
            )

    def pfrak(self, y):
        """Pressure as a function of the enthalpy variable."""
        return self.pressure(self.enthalpy_inverse(y))

    def pfrak_d1(self, y):
        """First derivative: exactly the density eta^{-1}(y)."""
        return self.enthalpy_inverse(y)

    def pfrak_d2(self, y):
        """Second derivative: eta^{-1}(y) / P'(eta^{-1}(y))."""
        rho = self.enthalpy_inverse(y)
        return rho / self.pressure_d1(rho)

    def pfrak_inverse(self, p):
        return self.enthalpy(self.pressure_inverse(p))

    def _validate_common(self):
        if self.rho_ext <= 0:
            raise ConfigurationError(f"rho_ext must be positive, got {self.rho_ext}")
        # rejects laws with a positive pressure offset at vacuum; soft power
        # laws (small gamma) still clear the factor-2 drop at t = 1e-8 rho_ext
        tiny = 1e-8 * self.rho_ext
        if not self.pressure(tiny) < 0.5 * self.pressure(self.rho_ext):
            raise ConfigurationError("pressure law must vanish as density tends to zero")
        if self.pressure_d1(self.rho_ext) <= 0:
            raise ConfigurationError("pressure law must be strictly increasing")


@dataclass(frozen=True)
class IsothermalEos(EosModel):
    """P(rho) = c2 * rho."""

    c2: float
    rho_ext: float

    def __post_init__(self):
        if self.c2 <= 0:
            raise ConfigurationError(f"c2 must be positive, got {self.c2}")
        self._validate_common()

    def pressure(self, rho):
        return self.c2 * np.asarray(rho, dtype=float)

    def pressure_d1(self, rho):
        return np.full_like(np.asarray(rho, dtype=float), self.c2)

    def pressure_inverse(self, p):
        p = np.asarray(p, dtype=float)
        if np.min(p) <= 0:
            raise DomainError("pressure must be positive")
        return p / self.c2

    def enthalpy(self, z):
        z = np.asarray(z, dtype=float)
        if np.min(z) <= 0:
            raise DomainError("density must be positive")
        return self.c2 * np.log(z / self.rho_ext)

    def enthalpy_inverse(self, y):
        return self.rho_ext * np.exp(np.asarray(y, dtype=float) / self.c2)

    @property
    def eta_min(self) -> float:
        return -math.inf

    @property
    def eta_max(self) -> float:
        return math.inf

    @property
    def pressure_max(self) -> float:
        return math.inf


@dataclass(frozen=True)
class PolytropicEos(EosModel):
    """P(rho) = K * rho^gamma with gamma != 1."""

    K: float
    gamma: float
    rho_ext: float

    def __post_init__(self):
        if self.K <= 0 or self.gamma <= 0:
            raise ConfigurationError("K and gamma must be positive")
        if self.gamma == 1.0:
            raise ConfigurationError("gamma = 1 is the isothermal law; use kind='isothermal'")
        self._validate_common()

    def pressure(self, rho):
        return self.K * np.asarray(rho, dtype=float) ** self.gamma

    def pressure_d1(self, rho):
        return self.K * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def pressure_inverse(self, p):
        p = np.asarray(p, dtype=float)
        if np.min(p) <= 0:
            raise DomainError("pressure must be positive")
        return (p / self.K) ** (1.0 / self.gamma)

    def enthalpy(self, z):
        z = np.asarray(z, dtype=float)
        if np.min(z) <= 0:
            raise DomainError("density must be positive")
        g = self.gamma
        return self.K * g / (g - 1.0) * (z ** (g - 1.0) - self.rho_ext ** (g - 1.0))

    def enthalpy_inverse(self, y):
        self._check_enthalpy_range(y)
        g = self.gamma
        base = self.rho_ext ** (g - 1.0) + (g - 1.0) * np.asarray(y, dtype=float) / (self.K * g)
        return base ** (1.0 / (g - 1.0))

    @property
    def eta_min(self) -> float:
        g = self.gamma
        if g > 1.0:
            return -self.K * g / (g - 1.0) * self.rho_ext ** (g - 1.0)
        return -math.inf

    @property
    def eta_max(self) -> float:
        g = self.gamma
        if g > 1.0:
            return math.inf
        return self.K * g / (1.0 - g) * self.rho_ext ** (g - 1.0)

    @property
    def pressure_max(self) -> float:
        return math.inf


class TabulatedEos(EosModel):
    """Monotone-cubic interpolation of a strictly increasing (rho, P) table."""

    def __init__(self, rho_table, p_table, rho_ext: float):
        from scipy.interpolate import PchipInterpolator
        from scipy.integrate import quad

        rho_table = np.asarray(rho_table, dtype=float)
        p_table = np.asarray(p_table, dtype=float)
        if rho_table.ndim != 1 or rho_table.size < 4 or rho_table.shape != p_table.shape:
            raise ConfigurationError("table needs at least 4 matching (rho, P) rows")
        if np.any(np.diff(rho_table) <= 0) or np.any(np.diff(p_table) <= 0):
            raise ConfigurationError("table columns must be strictly increasing")
        if np.min(rho_table) <= 0 or np.min(p_table) <= 0:
            raise ConfigurationError("table values must be positive")
        if not rho_table[0] <= rho_ext <= rho_table[-1]:
            raise ConfigurationError("rho_ext must lie inside the tabulated density range")
        self.rho_ext = float(rho_ext)
        self.rho_table = rho_table
        self.p_table = p_table
        self._interp = PchipInterpolator(rho_table, p_table)
        self._interp_d1 = self._interp.derivative()
        probe = np.linspace(rho_table[0], rho_table[-1], 256)
        if np.min(self._interp_d1(probe)) <= 0:
            raise ConfigurationError("interpolated pressure law is not strictly increasing")
        self._quad = quad
        self._eta_min = self._enthalpy_scalar(rho_table[0])
        self._eta_max = self._enthalpy_scalar(rho_table[-1])

    def pressure(self, rho):
        self._check_density(rho)
        return self._interp(rho)

    def pressure_d1(self, rho):
        self._check_density(rho)
        return self._interp_d1(rho)

    def _check_density(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.min(rho) < self.rho_table[0] or np.max(rho) > self.rho_table[-1]:
            raise DomainError(
                f"density outside tabulated range [{self.rho_table[0]}, {self.rho_table[-1]}]"
            )

    def pressure_inverse(self, p):
        def scalar(pv):
            if not self.p_table[0] <= pv <= self.p_table[-1]:
                raise RangeError(
                    "pressure outside tabulated range",
                    lo=self.p_table[0],
                    hi=self.p_table[-1],
                )
            lo, hi = self.rho_table[0], self.rho_table[-1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self._interp(mid) < pv:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        p = np.asarray(p, dtype=float)
        if p.ndim == 0:
            return scalar(float(p))
        return np.array([scalar(v) for v in p.ravel()]).reshape(p.shape)

    def _enthalpy_scalar(self, z: float) -> float:
        val, _ = self._quad(
            lambda t: self._interp_d1(t) / t,
            self.rho_ext,
            z,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=200,
        )
        return val

    def enthalpy(self, z):
        self._check_density(z)
        z = np.asarray(z, dtype=float)
        if z.ndim == 0:
            return self._enthalpy_scalar(float(z))
        return np.array([self._enthalpy_scalar(v) for v in z.ravel()]).reshape(z.shape)

    def enthalpy_inverse(self, y):
        def scalar(yv):
            if not self._eta_min < yv < self._eta_max:
                raise RangeError(
                    f"enthalpy value outside range ({self._eta_min}, {self._eta_max})",
                    lo=self._eta_min,
                    hi=self._eta_max,
                )
            lo, hi = self.rho_table[0], self.rho_table[-1]
            for _ in range(30):  # bisection bracket, then Newton to 1e-12 relative
                mid = 0.5 * (lo + hi)
                if self._enthalpy_scalar(mid) < yv:
                    lo = mid
                else:
                    hi = mid
            z = 0.5 * (lo + hi)
            for _ in range(20):
                step = (self._enthalpy_scalar(z) - yv) * z / self._interp_d1(z)
                z = min(max(z - step, self.rho_table[0]), self.rho_table[-1])
                if abs(step) <= 1e-12 * max(1.0, abs(z)):
                    break
            return z

        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            return scalar(float(y))
        return np.array([scalar(v) for v in y.ravel()]).reshape(y.shape)

    @property
    def eta_min(self) -> float:
        return self._eta_min

    @property
    def eta_max(self) -> float:
        return self._eta_max

    @property
    def pressure_max(self) -> float:
        return float(self.p_table[-1])


def make_eos(spec: dict, rho_ext: float) -> EosModel:
    """Construct a law from a config mapping like {"kind": "isothermal", "c2": 2.0}."""
    if "kind" not in spec:
        raise ConfigurationError("eos table needs a 'kind' key")
    kind = spec["kind"]
    if kind == "isothermal":
        return IsothermalEos(c2=float(spec["c2"]), rho_ext=rho_ext)
    if kind == "polytropic":
        return PolytropicEos(K=float(spec["K"]), gamma=float(spec["gamma"]), rho_ext=rho_ext)
    if kind == "tabulated":
        table = np.loadtxt(spec["path"], delimiter=",", skiprows=1)
        return TabulatedEos(table[:, 0], table[:, 1], rho_ext=rho_ext)
    raise ConfigurationError(f"unknown eos kind {kind!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Fixed constants of the hydrostatic problem.

    `r_max` is the largest sphere radius the ambient domain can contain
    (may be infinite); `r_slab` is the half-height of the slab in which the
    stratified interior density profile is defined, and must satisfy
    R_0 < r_slab < r_max.
    """

    sigma: float
    rho_ext: float
    p_ext_star: float
    r_max: float
    r_slab: float
    g: float = 0.0

    def __post_init__(self):
        for name in ("sigma", "rho_ext", "p_ext_star", "r_max", "r_slab"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")


def necessary_condition_holds(eos: EosModel, params: PhysicalParams) -> bool:
    """2 sigma / r_max + P_ext_star < P(rho_ext), with 2 sigma / r_max = 0
    when the ambient domain is all of space."""
    squeeze = 0.0 if math.isinf(params.r_max) else 2.0 * params.sigma / params.r_max
    return squeeze + params.p_ext_star < float(eos.pressure(params.rho_ext))


def require_necessary_condition(eos: EosModel, params: PhysicalParams):
    if not necessary_condition_holds(eos, params):
        squeeze = 0.0 if math.isinf(params.r_max) else 2.0 * params.sigma / params.r_max
        raise ConfigurationError(
            "necessary condition violated: 2*sigma/r_max + p_ext_star = "
            f"{squeeze + params.p_ext_star} must be < P(rho_ext) = "
            f"{float(eos.pressure(params.rho_ext))}"
        )


def alpha_lower_bound(eos: EosModel, params: PhysicalParams) -> float:
    squeeze = 0.0 if math.isinf(params.r_max) else 2.0 * params.sigma / params.r_max
    return float(eos.pfrak_inverse(params.p_ext_star + squeeze))


def radius_of_alpha(eos: EosModel, params: PhysicalParams, alpha: float) -> float:
    """Sphere radius R_alpha = 2 sigma / (pfrak(alpha) - P_ext_star)."""
    lo = alpha_lower_bound(eos, params)
    if alpha <= lo:
        raise DomainError(f"alpha = {alpha} at or below the admissible lower bound {lo}")
    if alpha >= eos.eta_max:
        raise DomainError(f"alpha = {alpha} at or above the enthalpy range top {eos.eta_max}")
    return 2.0 * params.sigma / (float(eos.pfrak(alpha)) - params.p_ext_star)


def validate_problem(eos: EosModel, params: PhysicalParams):
    """Checks run once per configured problem before any solve."""
    require_necessary_condition(eos, params)
    r0 = radius_of_alpha(eos, params, 0.0)
    if not r0 < params.r_slab < params.r_max:
        raise ConfigurationError(
            f"slab half-height r_slab = {params.r_slab} must lie in (R_0, r_max) = "
            f"({r0}, {params.r_max})"
        )


@dataclass(frozen=True)
class ValidityMargins:
    """Distances to the boundary of the state-validity region.

    enthalpy_margin: distance of alpha - g*lambda*zeta to the enthalpy range
    boundary (inf when the range is all of R); positivity_margin: min of the
    profile lambda; radicand_margin: min of lambda^2 + (1-zeta^2)(D lambda)^2,
    the base of the 3/2 power.  All must be positive for a valid state.
    """

    enthalpy_margin: float
    positivity_margin: float
    radicand_margin: float

    @property
    def ok(self) -> bool:
        return (
            self.enthalpy_margin > 0 and self.positivity_margin > 0 and self.radicand_margin > 0
        )

    def failing(self) -> str | None:
        for name in ("enthalpy_margin", "positivity_margin", "radicand_margin"):
            if getattr(self, name) <= 0:
                return name
        return None


def validity_margins_nodal(
    eos: EosModel,
    alpha: float,
    g: float,
    zeta: np.ndarray,
    lam: np.ndarray,
    dlam: np.ndarray,
) -> ValidityMargins:
    """Margins evaluated on precomputed nodal profile data."""
    arg = alpha - g * lam * zeta
    lo, hi = eos.eta_min, eos.eta_max
    margin = math.inf
    if not math.isinf(lo):
        margin = min(margin, float(np.min(arg - lo)))
    if not math.isinf(hi):
        margin = min(margin, float(np.min(hi - arg)))
    return ValidityMargins(
        enthalpy_margin=margin,
        positivity_margin=float(np.min(lam)),
        radicand_margin=float(np.min(lam**2 + (1.0 - zeta**2) * dlam**2)),
    )


def check_validity(
    eos: EosModel,
    params: PhysicalParams,
    alpha: float,
    g: float,
    lam: SpectralFunction,
    rule: QuadratureRule,
) -> ValidityMargins:
    """Margins of a full profile lambda over the quadrature nodes.

    Reports only; callers decide whether a non-positive margin is an error.
    """
    lam_nodes = synthesize(lam, rule.nodes)
    dlam_nodes = synthesize(differentiate(lam), rule.nodes)
    return validity_margins_nodal(eos, alpha, g, rule.nodes, lam_nodes, dlam_nodes)
