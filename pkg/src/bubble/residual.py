"""Nonlinear residual of the reformulated capillary jump condition and its
linearization blocks, evaluated pseudo-spectrally.

With lambda = R_alpha + u the full surface profile, the residual is

    Xi(alpha, g, u) = sigma [ -D((1-z^2) D u) + 2 (R_alpha + u) ]
        + sigma lambda^-2 [ z (1-z^2) (D lambda)^3 + 3 (1-z^2) lambda (D lambda)^2 ]
        + lambda^-1 (lambda^2 + (D lambda)^2 (1-z^2))^(3/2)
            [ (P_ext_star - rho_ext g lambda z) - pfrak(alpha - g lambda z) ],

the denominator-cleared form of the pointwise balance
sigma K = pfrak(alpha - g lambda z) - (P_ext_star - rho_ext g lambda z),
where K is the total curvature of the profile surface.  The linear part is
applied exactly in coefficient space; the nonlinear part is evaluated at
over-integrating quadrature nodes and re-analyzed.

Linearizations are central finite differences at general states; on the
trivial branch (g = 0, u = 0) the closed forms

    d/du   -> sigma (L - 2I) v
    d/dg   -> (pfrak'(alpha) - rho_ext) R_alpha^3 zeta

are used instead (the finite-difference route is kept available for
cross-checking them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eos import (
    EosModel,
    PhysicalParams,
    ValidityMargins,
    radius_of_alpha,
    validity_margins_nodal,
)
from .errors import StateInvalidError
from .legendre import eigenvalues
from .spectral import (
    QuadratureRule,
    SpectralFunction,
    basis_matrix,
    default_quad_order,
    differentiate,
    gauss_legendre,
    reflect,
    synthesize,
)

__all__ = ["ResidualState", "CurvatureProblem"]


@dataclass(frozen=True)
class ResidualState:
    """One point (alpha, g, u) with cached nodal profile data and margins."""

    alpha: float
    g: float
    u: SpectralFunction
    r_alpha: float
    lam_nodes: np.ndarray
    dlam_nodes: np.ndarray
    margins: ValidityMargins

    def __post_init__(self):
        self.lam_nodes.flags.writeable = False
        self.dlam_nodes.flags.writeable = False

    @property
    def is_trivial(self) -> bool:
        return self.g == 0.0 and not np.any(self.u.coeffs)


class CurvatureProblem:
    """Discretization context: one equation of state, one set of physical
    constants, one truncation degree, one padded quadrature rule."""

    def __init__(
        self,
        eos: EosModel,
        params: PhysicalParams,
        degree: int = 32,
        quad_order: int | None = None,
    ):
        self.eos = eos
        self.params = params
        self.degree = int(degree)
        self.rule = gauss_legendre(quad_order or default_quad_order(self.degree))
        self.max_degree = self.rule.order - 1
        self._basis = basis_matrix(self.rule.nodes, self.max_degree)
        self._wbasis = self._basis * self.rule.weights

    # --- state construction -------------------------------------------------

    def state(self, alpha: float, g: float, u: SpectralFunction | None = None) -> ResidualState:
        """Build a state; margins are reported, never enforced here."""
        if u is None:
            u = SpectralFunction.zero(self.degree)
        r_alpha = radius_of_alpha(self.eos, self.params, alpha)
        nodes = self.rule.nodes
        u_nodes = u.coeffs @ self._basis[: u.degree + 1]
        if u.degree >= 1:
            du = differentiate(u)
            du_nodes = du.coeffs @ self._basis[: du.degree + 1]
        else:
            du_nodes = np.zeros_like(nodes)
        lam = r_alpha + u_nodes
        margins = validity_margins_nodal(self.eos, alpha, g, nodes, lam, du_nodes)
        return ResidualState(
            alpha=alpha,
            g=g,
            u=u,
            r_alpha=r_alpha,
            lam_nodes=lam,
            dlam_nodes=du_nodes,
            margins=margins,
        )

    def _require_valid(self, state: ResidualState):
        bad = state.margins.failing()
        if bad is not None:
            raise StateInvalidError(
                f"state (alpha={state.alpha}, g={state.g}) invalid: "
                f"{bad} = {getattr(state.margins, bad)} <= 0",
                margins=state.margins,
            )

    def analyze(self, values: np.ndarray, degree: int) -> SpectralFunction:
        return SpectralFunction(self._wbasis[: degree + 1] @ values)

    # --- residual ------------------------------------------------------------

    def nonlinear_nodal(self, state: ResidualState) -> np.ndarray:
        """The denominator-cleared nonlinear term at the quadrature nodes."""
        self._require_valid(state)
        z = self.rule.nodes
        lam = state.lam_nodes
        dlam = state.dlam_nodes
        one_m_z2 = 1.0 - z * z
        curvature_part = (z * one_m_z2 * dlam**3 + 3.0 * one_m_z2 * lam * dlam**2) / lam**2
        radicand = lam * lam + dlam * dlam * one_m_z2
        jump = (self.params.p_ext_star - self.params.rho_ext * state.g * lam * z) - self.eos.pfrak(
            state.alpha - state.g * lam * z
        )
        return self.params.sigma * curvature_part + radicand**1.5 * jump / lam

    def residual(self, state: ResidualState, degree: int | None = None) -> SpectralFunction:
        """Coefficients of Xi, truncated to the problem degree by default."""
        degree = self.degree if degree is None else degree
        sigma = self.params.sigma
        out = np.zeros(degree + 1)
        nu = min(state.u.degree, degree)
        n = np.arange(nu + 1, dtype=float)
        out[: nu + 1] = sigma * (n * (n + 1) + 2.0) * state.u.coeffs[: nu + 1]
        out[0] += 2.0 * sigma * state.r_alpha * math.sqrt(2.0)
        out += self._wbasis[: degree + 1] @ self.nonlinear_nodal(state)
        return SpectralFunction(out)

    def residual_at(self, alpha: float, g: float, u: SpectralFunction) -> SpectralFunction:
        return self.residual(self.state(alpha, g, u))

    # --- linearizations -------------------------------------------------------

    def linearization_u(
        self, state: ResidualState, v: SpectralFunction, h: float | None = None
    ) -> SpectralFunction:
        """Directional derivative of Xi in u; closed form on the trivial branch."""
        if state.is_trivial:
            lam = eigenvalues(v.degree)
            return SpectralFunction(
                self.params.sigma * (lam - 2.0) * v.coeffs
            ).padded(self.degree).truncated(self.degree)
        return self.linearization_u_fd(state, v, h)

    def linearization_u_fd(
        self, state: ResidualState, v: SpectralFunction, h: float | None = None
    ) -> SpectralFunction:
        """Always the central-difference route (used to cross-check the
        closed form and to certify the kernel numerically)."""
        if h is None:
            h = 1e-6 * max(1.0, state.u.norm_l2()) / max(1.0, v.norm_l2())
        up = self.residual_at(state.alpha, state.g, state.u + h * v)
        um = self.residual_at(state.alpha, state.g, state.u - h * v)
        return (1.0 / (2.0 * h)) * (up - um)

    def linearization_g(self, state: ResidualState, h: float = 1e-6) -> SpectralFunction:
        """dXi/dg; closed form (pfrak'(alpha) - rho_ext) R_alpha^3 zeta on the
        trivial branch."""
        if state.is_trivial:
            coeff = (
                (float(self.eos.pfrak_d1(state.alpha)) - self.params.rho_ext)
                * state.r_alpha**3
                * math.sqrt(2.0 / 3.0)
            )
            out = np.zeros(self.degree + 1)
            out[1] = coeff
            return SpectralFunction(out)
        return self.linearization_g_fd(state, h)

    def linearization_g_fd(self, state: ResidualState, h: float = 1e-6) -> SpectralFunction:
        up = self.residual(self.state(state.alpha, state.g + h, state.u))
        um = self.residual(self.state(state.alpha, state.g - h, state.u))
        return (1.0 / (2.0 * h)) * (up - um)

    def linearization_alpha(self, state: ResidualState, h: float | None = None) -> SpectralFunction:
        """dXi/dalpha by central difference; identically zero along the
        trivial branch, so no closed form is available or needed."""
        if h is None:
            h = 1e-6 * max(1.0, abs(state.alpha))
        up = self.residual(self.state(state.alpha + h, state.g, state.u))
        um = self.residual(self.state(state.alpha - h, state.g, state.u))
        return (1.0 / (2.0 * h)) * (up - um)

    # --- pointwise diagnostics -------------------------------------------------

    def raw_curvature(self, state: ResidualState, zeta: np.ndarray) -> np.ndarray:
        """Total curvature of the profile surface from the quotient formula.

        Kept as a cross-check route only: near the poles the quotient is
        ill-conditioned compared with the cleared form used in `residual`.
        """
        zeta = np.asarray(zeta, dtype=float)
        lam_sf = state.u.padded(max(state.u.degree, 2)) + SpectralFunction.constant(
            state.r_alpha, degree=max(state.u.degree, 2)
        )
        dlam_sf = differentiate(lam_sf)
        lam = synthesize(lam_sf, zeta)
        dlam = synthesize(dlam_sf, zeta)
        d2lam = synthesize(differentiate(dlam_sf), zeta)
        one_m_z2 = 1.0 - zeta * zeta
        q = lam * lam + dlam * dlam * one_m_z2
        first = (zeta * dlam + lam) / (lam * np.sqrt(q))
        second = (-one_m_z2 * lam * d2lam + 2.0 * one_m_z2 * dlam**2 + zeta * lam * dlam + lam**2) / q**1.5
        return first + second

    def laplace_young_mismatch(self, state: ResidualState, zeta: np.ndarray) -> np.ndarray:
        """sigma K - (P_int - P_ext) sampled on the surface."""
        zeta = np.asarray(zeta, dtype=float)
        lam_sf = state.u.padded(max(state.u.degree, 2)) + SpectralFunction.constant(
            state.r_alpha, degree=max(state.u.degree, 2)
        )
        lam = synthesize(lam_sf, zeta)
        x3 = lam * zeta
        p_int = self.eos.pfrak(state.alpha - state.g * x3)
        p_ext = self.params.p_ext_star - self.params.rho_ext * state.g * x3
        return self.params.sigma * self.raw_curvature(state, zeta) - (p_int - p_ext)

    def reflected_state(self, state: ResidualState) -> ResidualState:
        return self.state(state.alpha, -state.g, reflect(state.u))
