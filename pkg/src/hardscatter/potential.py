"""Single-layer potential on a triangulated surface and the hierarchy of
layer densities that drives the small-wavenumber expansion.

The operator maps a piecewise-constant surface density mu to the boundary
values of ``integral mu(p) / |p - r| dsigma(p)`` collocated at triangle
centroids.  In this representation the normal-derivative jump of the
potential across the surface is ``4 pi mu``; every formula downstream uses
that convention.

Densities solved here:

* ``mu0``     : boundary data -1; its weighted sum gives the capacity.
* ``mu1a``    : boundary data -z (the antisymmetric first-order piece).
* ``mu1s``    : -capacity * mu0 (the symmetric first-order piece).
* ``mu2``     : boundary data -z^2/2 - integral(mu1) - (1/2) integral(mu0 |p-r|).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack
from scipy.spatial import cKDTree

from .geometry import TriMesh

__all__ = [
    "SolverError",
    "SingleLayerOperator",
    "SurfaceDensity",
    "assemble_single_layer",
    "solve_density",
    "mu0",
    "capacity",
    "mu1_parts",
    "mu2",
    "distance_moment",
    "dump_operator",
    "load_operator",
    "density_to_csv",
]

# Residual bound for every density solve, relative max-norm.
RESIDUAL_TOL = 1e-10
# Reciprocal condition estimate below this is treated as a singular system.
RCOND_FLOOR = 1e-14

# Degree-2 symmetric 3-point rule on the reference triangle.
_NEAR_RULE = np.array([
    [2 / 3, 1 / 6, 1 / 6],
    [1 / 6, 2 / 3, 1 / 6],
    [1 / 6, 1 / 6, 2 / 3],
])

_ASSEMBLY_BLOCK = 2048


class SolverError(Exception):
    """Dense solve failed: singular system or unacceptable residual."""


@dataclass(frozen=True)
class SurfaceDensity:
    """Piecewise-constant real field on the triangles of a mesh."""

    values: np.ndarray
    mesh: TriMesh

    def __post_init__(self):
        if len(self.values) != self.mesh.n_triangles:
            raise ValueError("density length does not match triangle count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite density values")

    def integral(self) -> float:
        """Surface integral, sum of value * area."""
        return float(np.sum(self.values * self.mesh.areas))

    def moment(self, coordinate_values: np.ndarray) -> float:
        """Surface integral weighted by a per-triangle coordinate field."""
        return float(np.sum(coordinate_values * self.values * self.mesh.areas))


@dataclass
class SingleLayerOperator:
    """Dense collocation matrix of the 1/|p - r| single layer.

    Entry (i, j) approximates the integral of ``1/|p - c_i|`` over triangle
    j: exact edge-decomposition formula on the diagonal, a symmetric 3-point
    rule for close pairs, one-point quadrature otherwise.
    """

    mesh: TriMesh
    matrix: np.ndarray
    _lu: tuple | None = field(default=None, repr=False)
    _rcond: float | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.mesh.n_triangles

    def factorize(self):
        """LU-factorize once; raise SolverError for singular systems."""
        if self._lu is None:
            anorm = float(np.abs(self.matrix).sum(axis=0).max())
            try:
                with warnings.catch_warnings():
                    # exact singularity is reported via rcond below
                    warnings.simplefilter("ignore", sla.LinAlgWarning)
                    lu, piv = sla.lu_factor(self.matrix)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"LU factorization failed: {exc}") from exc
            rcond, info = lapack.dgecon(lu, anorm)
            if info != 0 or not np.isfinite(rcond) or rcond < RCOND_FLOOR:
                raise SolverError(
                    f"singular single-layer system (rcond estimate {rcond:.3e}); "
                    "the mesh is likely degenerate"
                )
            self._lu = (lu, piv)
            self._rcond = float(rcond)
        return self._lu


def _triangle_self_integral(mesh: TriMesh) -> np.ndarray:
    """Exact integral of 1/|p - c| over each planar triangle from its own
    centroid, summed edge by edge in polar form."""
    p0, p1, p2 = mesh.corners()
    cent = mesh.centroids
    total = np.zeros(mesh.n_triangles)
    for a, b in ((p0, p1), (p1, p2), (p2, p0)):
        tangent = b - a
        length = np.linalg.norm(tangent, axis=1)
        that = tangent / length[:, None]
        sa = np.einsum("ij,ij->i", a - cent, that)
        sb = np.einsum("ij,ij->i", b - cent, that)
        foot = a - sa[:, None] * that
        dist = np.linalg.norm(foot - cent, axis=1)
        ra = np.linalg.norm(a - cent, axis=1)
        rb = np.linalg.norm(b - cent, axis=1)
        total += dist * np.log((rb + sb) / (ra + sa))
    return total


def _near_pairs(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Ordered index pairs (i, j), i != j, closer than twice the larger
    triangle diameter; both orders included."""
    diam = mesh.triangle_diameters()
    tree = cKDTree(mesh.centroids)
    pairs = tree.query_pairs(2.0 * float(diam.max()), output_type="ndarray")
    if len(pairs) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    i, j = pairs[:, 0], pairs[:, 1]
    dist = np.linalg.norm(mesh.centroids[i] - mesh.centroids[j], axis=1)
    keep = dist <= 2.0 * np.maximum(diam[i], diam[j])
    i, j = i[keep], j[keep]
    return np.concatenate([i, j]), np.concatenate([j, i])


def assemble_single_layer(mesh: TriMesh) -> SingleLayerOperator:
    """Assemble the dense collocation matrix for the 1/r kernel."""
    n = mesh.n_triangles
    cent = mesh.centroids
    areas = mesh.areas
    matrix = np.empty((n, n))
    for i0 in range(0, n, _ASSEMBLY_BLOCK):
        i1 = min(i0 + _ASSEMBLY_BLOCK, n)
        dist = np.linalg.norm(cent[i0:i1, None, :] - cent[None, :, :], axis=2)
        with np.errstate(divide="ignore"):
            matrix[i0:i1] = areas[None, :] / dist

    ii, jj = _near_pairs(mesh)
    if len(ii):
        p0, p1, p2 = mesh.corners()
        acc = np.zeros(len(ii))
        for w0, w1, w2 in _NEAR_RULE:
            q = w0 * p0[jj] + w1 * p1[jj] + w2 * p2[jj]
            acc += 1.0 / np.linalg.norm(q - cent[ii], axis=1)
        matrix[ii, jj] = (areas[jj] / 3.0) * acc

    diag = _triangle_self_integral(mesh)
    if np.any(diag <= 0.0):
        raise SolverError("non-positive self-integral; degenerate triangle")
    matrix[np.arange(n), np.arange(n)] = diag
    return SingleLayerOperator(mesh, matrix)


def solve_density(operator: SingleLayerOperator, data: np.ndarray) -> SurfaceDensity:
    """Solve S mu = data by dense LU, with one refinement pass if needed.

    The relative max-norm residual must come out below ``RESIDUAL_TOL``.
    """
    g = np.asarray(data, dtype=float)
    if g.shape != (operator.n,):
        raise ValueError(f"data must have shape ({operator.n},)")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite boundary data")
    lu = operator.factorize()
    x = sla.lu_solve(lu, g)
    scale = float(np.abs(g).max()) or 1.0
    residual = float(np.abs(operator.matrix @ x - g).max()) / scale
    if residual >= RESIDUAL_TOL:
        x = x + sla.lu_solve(lu, g - operator.matrix @ x)
        residual = float(np.abs(operator.matrix @ x - g).max()) / scale
        if residual >= RESIDUAL_TOL:
            raise SolverError(
                f"solve residual {residual:.3e} exceeds {RESIDUAL_TOL:g} "
                f"(rcond {operator._rcond:.3e})"
            )
    return SurfaceDensity(x, operator.mesh)


def mu0(mesh: TriMesh, operator: SingleLayerOperator | None = None) -> SurfaceDensity:
    """Density with unit negative boundary potential (data -1)."""
    operator = operator or assemble_single_layer(mesh)
    return solve_density(operator, -np.ones(operator.n))


def capacity(mesh: TriMesh, operator: SingleLayerOperator | None = None) -> float:
    """Electrostatic capacity; a sphere of radius a gives a."""
    density = mu0(mesh, operator)
    value = -density.integral()
    if value <= 0:
        raise SolverError(f"non-positive capacity {value:g}")
    return value


def mu1_parts(
    mesh: TriMesh,
    capacity_value: float,
    mu0_density: SurfaceDensity,
    operator: SingleLayerOperator | None = None,
) -> tuple[SurfaceDensity, SurfaceDensity]:
    """First-order densities (symmetric part, antisymmetric part).

    The antisymmetric part solves the layer equation with data -z; the
    symmetric part is ``-capacity * mu0`` pointwise, so that their sum
    carries the combined first-order data ``-z + capacity``.
    """
    operator = operator or assemble_single_layer(mesh)
    mu1a = solve_density(operator, -mesh.centroids[:, 2])
    mu1s = SurfaceDensity(-capacity_value * mu0_density.values, mesh)
    return mu1s, mu1a


def distance_moment(mesh: TriMesh, density: SurfaceDensity) -> np.ndarray:
    """Collocated values of ``integral |p - r| density(p) dsigma(p)``.

    Same near/far split as the operator; the kernel is regular, so the
    diagonal uses the centroid value (which vanishes).
    """
    cent = mesh.centroids
    weighted = density.values * mesh.areas
    n = mesh.n_triangles
    out = np.empty(n)
    for i0 in range(0, n, _ASSEMBLY_BLOCK):
        i1 = min(i0 + _ASSEMBLY_BLOCK, n)
        dist = np.linalg.norm(cent[i0:i1, None, :] - cent[None, :, :], axis=2)
        out[i0:i1] = dist @ weighted
    ii, jj = _near_pairs(mesh)
    if len(ii):
        p0, p1, p2 = mesh.corners()
        acc = np.zeros(len(ii))
        for w0, w1, w2 in _NEAR_RULE:
            q = w0 * p0[jj] + w1 * p1[jj] + w2 * p2[jj]
            acc += np.linalg.norm(q - cent[ii], axis=1)
        one_point = np.linalg.norm(cent[jj] - cent[ii], axis=1)
        np.add.at(out, ii, (acc / 3.0 - one_point) * weighted[jj])
    return out


def mu2(
    mesh: TriMesh,
    mu0_density: SurfaceDensity,
    mu1_density: SurfaceDensity,
    operator: SingleLayerOperator | None = None,
) -> SurfaceDensity:
    """Second-order density.

    Boundary data: ``-z^2/2 - integral(mu1) - (1/2) integral(mu0 |p-r|)``,
    the last term collocated with :func:`distance_moment`.
    """
    operator = operator or assemble_single_layer(mesh)
    z = mesh.centroids[:, 2]
    data = -0.5 * z**2 - mu1_density.integral() - 0.5 * distance_moment(mesh, mu0_density)
    return solve_density(operator, data)


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"SLP1"


def dump_operator(operator: SingleLayerOperator, path) -> None:
    """Binary dump: 16-byte header (magic, pad, n as little-endian u64),
    then the matrix row-major as little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC + b"\x00" * 4 + struct.pack("<Q", operator.n))
        fh.write(np.ascontiguousarray(operator.matrix, dtype="<f8").tobytes())


def load_operator(path, mesh: TriMesh) -> SingleLayerOperator:
    """Read a dump written by :func:`dump_operator` for the same mesh."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _MAGIC:
            raise ValueError("not a single-layer operator dump")
        (n,) = struct.unpack("<Q", header[8:16])
        if n != mesh.n_triangles:
            raise ValueError(f"dump is for n={n}, mesh has {mesh.n_triangles}")
        data = np.frombuffer(fh.read(8 * n * n), dtype="<f8")
    if data.size != n * n:
        raise ValueError("truncated operator dump")
    return SingleLayerOperator(mesh, data.reshape(n, n).astype(float))


def density_to_csv(density: SurfaceDensity, path, header_lines=()) -> None:
    """CSV with columns triangle_index, cx, cy, cz, area, value."""
    mesh = density.mesh
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("triangle_index,cx,cy,cz,area,value\n")
        for i in range(mesh.n_triangles):
            cx, cy, cz = mesh.centroids[i]
            fh.write(
                f"{i},{cx:.17g},{cy:.17g},{cz:.17g},"
                f"{mesh.areas[i]:.17g},{density.values[i]:.17g}\n"
            )
