"""Bubble geometry reconstruction, certification, and export.

The surface is the image of the unit sphere under the star-shaped map
x -> lambda(x3) x.  Injectivity is certified by positivity of
d/dt [t lambda(t)] = lambda + t lambda' on a fine grid, containment by
max lambda <= r_slab; exports refuse profiles that fail either check.
Interior fields follow the stratified formulas rho = eta^{-1}(alpha - g x3),
P_int = pfrak(alpha - g x3), and the ambient pressure is
P_ext = P_ext_star - rho_ext g x3 everywhere in the slab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eos import EosModel, PhysicalParams
from .errors import DomainError, GeometryError
from .spectral import SpectralFunction, differentiate, synthesize

__all__ = [
    "BubbleGeometry",
    "FieldSample",
    "Mesh",
    "check_injective",
    "containment_max",
    "validate_geometry",
    "surface_mesh",
    "mesh_volume",
    "mesh_edge_counts",
    "write_mesh",
    "sample_fields",
    "write_profile_csv",
    "write_fields_csv",
]

_GRID = 1024


@dataclass(frozen=True)
class BubbleGeometry:
    """Full profile lambda = R_alpha + u together with its parameters."""

    lam: SpectralFunction
    g: float
    alpha: float
    params: PhysicalParams
    eos: EosModel

    @staticmethod
    def from_branch_point(problem, point) -> "BubbleGeometry":
        lam = point.u.padded(max(point.u.degree, 2)) + SpectralFunction.constant(
            point.r_alpha, degree=max(point.u.degree, 2)
        )
        return BubbleGeometry(
            lam=lam, g=point.g, alpha=point.alpha, params=problem.params, eos=problem.eos
        )


def check_injective(lam: SpectralFunction, n_grid: int = _GRID) -> float:
    """min over a grid of lambda(t) + t lambda'(t); positive certifies that
    t -> t lambda(t) is increasing, hence the surface map is injective."""
    grid = np.linspace(-1.0, 1.0, n_grid)
    dlam = differentiate(lam) if lam.degree >= 1 else SpectralFunction.zero(0)
    return float(np.min(synthesize(lam, grid) + grid * synthesize(dlam, grid)))


def containment_max(lam: SpectralFunction, n_grid: int = _GRID) -> float:
    grid = np.linspace(-1.0, 1.0, n_grid)
    return float(np.max(synthesize(lam, grid)))


def validate_geometry(geometry: BubbleGeometry) -> tuple:
    """Returns (injectivity margin, max radius); raises when either the
    injectivity or the slab-containment certificate fails."""
    margin = check_injective(geometry.lam)
    reach = containment_max(geometry.lam)
    if margin <= 0:
        raise GeometryError(f"injectivity margin {margin} is not positive")
    if reach > geometry.params.r_slab:
        raise GeometryError(
            f"profile reaches {reach}, beyond the slab half-height {geometry.params.r_slab}"
        )
    return margin, reach


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3)
    faces: list  # tuples of 0-based vertex ids, len 3 or 4


def surface_mesh(geometry: BubbleGeometry, n_theta: int, n_zeta: int) -> Mesh:
    """Quad mesh of the bubble surface with triangle fans at the poles.

    The zeta interval is split into n_zeta bands: two polar caps and
    n_zeta - 2 quad bands over n_theta azimuthal sectors, so the mesh has
    n_theta (n_zeta - 1) + 2 vertices and n_theta (n_zeta - 2) quads plus
    2 n_theta triangles.
    """
    if n_theta < 3 or n_zeta < 2:
        raise DomainError("mesh needs n_theta >= 3 and n_zeta >= 2")
    validate_geometry(geometry)
    lam = geometry.lam
    zeta_levels = -1.0 + 2.0 * np.arange(n_zeta + 1) / n_zeta
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    vertices = [np.array([0.0, 0.0, -float(synthesize(lam, -1.0))])]
    for j in range(1, n_zeta):
        z = zeta_levels[j]
        radius = float(synthesize(lam, z))
        s = math.sqrt(1.0 - z * z)
        ring = np.column_stack(
            [radius * s * np.cos(theta), radius * s * np.sin(theta), np.full(n_theta, radius * z)]
        )
        vertices.append(ring)
    vertices.append(np.array([0.0, 0.0, float(synthesize(lam, 1.0))]))
    verts = np.vstack([v if v.ndim == 2 else v[None, :] for v in vertices])

    def ring_id(j, i):
        return 1 + (j - 1) * n_theta + (i % n_theta)

    south, north = 0, verts.shape[0] - 1
    faces = []
    for i in range(n_theta):
        faces.append((south, ring_id(1, i + 1), ring_id(1, i)))
    for j in range(1, n_zeta - 1):
        for i in range(n_theta):
            faces.append((ring_id(j, i), ring_id(j, i + 1), ring_id(j + 1, i + 1), ring_id(j + 1, i)))
    for i in range(n_theta):
        faces.append((north, ring_id(n_zeta - 1, i), ring_id(n_zeta - 1, i + 1)))
    return Mesh(vertices=verts, faces=faces)


def mesh_volume(mesh: Mesh) -> float:
    """Signed volume by the divergence theorem over fan-triangulated faces;
    positive for outward-oriented closed surfaces."""
    v = mesh.vertices
    total = 0.0
    for face in mesh.faces:
        for a, b, c in [(face[0], face[1], face[2])] + (
            [(face[0], face[2], face[3])] if len(face) == 4 else []
        ):
            total += float(np.linalg.det(np.array([v[a], v[b], v[c]])))
    return total / 6.0


def mesh_edge_counts(mesh: Mesh) -> tuple:
    """(undirected edge -> face count histogram is 2 everywhere, directed
    edges all unique) as booleans, for watertightness checks."""
    undirected = {}
    directed = set()
    consistent = True
    for face in mesh.faces:
        m = len(face)
        for i in range(m):
            a, b = face[i], face[(i + 1) % m]
            if (a, b) in directed:
                consistent = False
            directed.add((a, b))
            key = (min(a, b), max(a, b))
            undirected[key] = undirected.get(key, 0) + 1
    watertight = all(count == 2 for count in undirected.values())
    return watertight, consistent


def write_mesh(mesh: Mesh, path, config_hash: str = ""):
    """Plain-text mesh: `v x y z` lines then 1-indexed `f i j k [l]` lines."""
    lines = []
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    for vert in mesh.vertices:
        lines.append("v " + " ".join(format(c, ".17g") for c in vert))
    for face in mesh.faces:
        lines.append("f " + " ".join(str(i + 1) for i in face))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class FieldSample:
    """Fields at one point: interior density/pressure are None outside."""

    position: np.ndarray
    rho_int: float | None
    p_int: float | None
    p_ext: float


def sample_fields(geometry: BubbleGeometry, points: np.ndarray) -> list:
    """Density and pressures at the given points.

    Points must lie in the slab |x3| <= r_slab.  Interior membership uses
    the exact radial test for star-shaped surfaces: |x| <= lambda(x3/|x|).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 3:
        raise DomainError("points must be an (n, 3) array")
    r_slab = geometry.params.r_slab
    out = []
    for p in points:
        if abs(p[2]) > r_slab:
            raise DomainError(f"point {p} outside the slab |x3| <= {r_slab}")
        p_ext = geometry.params.p_ext_star - geometry.params.rho_ext * geometry.g * p[2]
        norm = float(np.linalg.norm(p))
        if norm == 0.0:
            inside = True
        else:
            inside = norm <= float(synthesize(geometry.lam, p[2] / norm)) * (1.0 + 1e-12)
        if inside:
            arg = geometry.alpha - geometry.g * p[2]
            rho = float(geometry.eos.enthalpy_inverse(arg))
            p_int = float(geometry.eos.pfrak(arg))
            out.append(FieldSample(position=p.copy(), rho_int=rho, p_int=p_int, p_ext=p_ext))
        else:
            out.append(FieldSample(position=p.copy(), rho_int=None, p_int=None, p_ext=p_ext))
    return out


def write_profile_csv(geometry: BubbleGeometry, path, n_points: int = 257, config_hash: str = ""):
    """Columns zeta, lambda, dlambda on a uniform grid."""
    grid = np.linspace(-1.0, 1.0, n_points)
    lam = synthesize(geometry.lam, grid)
    dlam = synthesize(differentiate(geometry.lam), grid)
    lines = []
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    lines.append("zeta,lambda,dlambda")
    for z, l, d in zip(grid, lam, dlam):
        lines.append(",".join(format(v, ".17g") for v in (z, l, d)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fields_csv(samples, path, config_hash: str = ""):
    """Columns x, y, z, rho_int, P_int, P_ext; empty cells outside the bubble."""
    lines = []
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    lines.append("x,y,z,rho_int,P_int,P_ext")
    for s in samples:
        cells = [format(v, ".17g") for v in s.position]
        cells.append("" if s.rho_int is None else format(s.rho_int, ".17g"))
        cells.append("" if s.p_int is None else format(s.p_int, ".17g"))
        cells.append(format(s.p_ext, ".17g"))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
