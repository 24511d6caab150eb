"""Mass, damping and stiffness assembly on the structured hexahedral grid.

All elements of a structured grid share one geometry, so every element matrix is a
scalar multiple of a reference block (rho * M1, mu * K1, eta * K1).  Global matrices are
assembled straight into CSR on the 27-point node stencil, which keeps memory at the
final matrix size and makes the summation order deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import CORNERS, Grid, _parse_face, eval_shape
from .material import KelvinVoigt, MaterialField


class AssemblyError(ValueError):
    pass


GAUSS_2 = (np.array([-1.0, 1.0]) / np.sqrt(3.0), np.array([1.0, 1.0]))


def _gauss_points(order: int):
    pts, wts = np.polynomial.legendre.leggauss(order)
    grid = np.array([[a, b, c] for c in pts for b in pts for a in pts])
    w = np.array([wa * wb * wc for wc in wts for wb in wts for wa in wts])
    return grid, w


@lru_cache(maxsize=32)
def reference_blocks(spacing: tuple[float, float, float], order: int = 2):
    """Unit-coefficient element blocks ``(M1, K1)`` (24 x 24) for an axis-aligned hex.

    ``M1 = int N_a N_b I``; ``K1 = int 2 eps(N_a e_i) : eps(N_b e_j)``, i.e. the stiffness
    for mu = 1.  Local DOF index is ``3 * a + i``.
    """
    h = np.asarray(spacing, dtype=float)
    if np.any(~np.isfinite(h)) or np.any(h <= 0):
        raise AssemblyError(f"degenerate element with spacing {spacing}")
    jac = float(np.prod(h)) / 8.0
    pts, wts = _gauss_points(order)
    m8 = np.zeros((8, 8))
    k = np.zeros((8, 3, 8, 3))
    eye = np.eye(3)
    for xi, w in zip(pts, wts):
        s = eval_shape(xi, h)
        n, g = s.values, s.gradients
        m8 += w * jac * np.outer(n, n)
        # 2 eps(N_a e_i):eps(N_b e_j) = delta_ij g_a.g_b + g_a[j] g_b[i]
        gg = g @ g.T
        k += w * jac * (
            np.einsum("ab,ij->aibj", gg, eye) + np.einsum("aj,bi->aibj", g, g)
        )
    m1 = np.kron(m8, eye)
    k1 = k.reshape(24, 24)
    return m1, 0.5 * (k1 + k1.T)


def element_matrices(grid: Grid, element: int, material: KelvinVoigt, order: int = 2):
    """Dense element blocks ``(Me, Ce, Ke)`` for one element."""
    if not 0 <= element < grid.n_elements:
        raise AssemblyError(f"element {element} out of range")
    m1, k1 = reference_blocks(tuple(grid.spacing), order)
    return material.rho * m1, material.eta * k1, material.mu * k1


# 27 neighbour offsets ordered so that the neighbour's node index increases with d
_OFFSETS = np.array([[dx, dy, dz] for dz in (-1, 0, 1) for dy in (-1, 0, 1) for dx in (-1, 0, 1)])


def _offset_code(off) -> int:
    dx, dy, dz = off
    return int((dz + 1) * 9 + (dy + 1) * 3 + (dx + 1))


@lru_cache(maxsize=8)
def _stencil_pattern(grid: Grid):
    """CSR ``indptr``/``indices`` and validity mask of the 27-point vector stencil."""
    nn = grid.n_nodes
    ijk = np.stack(grid.node_ijk(np.arange(nn)), axis=1)  # (nn, 3)
    dims = np.asarray(grid.nodes_per_axis)
    nb = ijk[:, None, :] + _OFFSETS[None, :, :]  # (nn, 27, 3)
    valid = np.all((nb >= 0) & (nb < dims), axis=2)  # (nn, 27)
    nb_index = grid.node_index(nb[..., 0], nb[..., 1], nb[..., 2])
    cols = 3 * nb_index[:, None, :, None] + np.arange(3)[None, None, None, :]  # (nn,1,27,3)
    cols = np.broadcast_to(cols, (nn, 3, 27, 3))
    mask = np.broadcast_to(valid[:, None, :, None], (nn, 3, 27, 3))
    indices = cols[mask].astype(np.int32)
    per_row = 3 * valid.sum(axis=1)
    indptr = np.concatenate([[0], np.cumsum(np.repeat(per_row, 3))]).astype(np.int64)
    return indptr, indices, mask


def assemble_scaled(grid: Grid, ref: np.ndarray, coef: np.ndarray) -> sp.csr_matrix:
    """Assemble ``sum_e coef[e] * ref`` into a CSR matrix on the shared stencil pattern."""
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (grid.n_elements,):
        raise AssemblyError("one coefficient per element is required")
    vals = np.zeros((grid.n_nodes, 27, 3, 3))
    en = grid.element_nodes
    for a in range(8):
        na = en[:, a]
        for b in range(8):
            d = _offset_code(CORNERS[b] - CORNERS[a])
            vals[na, d] += coef[:, None, None] * ref[3 * a : 3 * a + 3, 3 * b : 3 * b + 3]
    indptr, indices, mask = _stencil_pattern(grid)
    data = vals.transpose(0, 2, 1, 3)[mask]
    n = grid.n_dofs
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def assemble_global(grid: Grid, material: MaterialField):
    """Global ``(M, C, K)`` for the Kelvin-Voigt field, without boundary terms."""
    if material.grid != grid:
        raise AssemblyError("material is defined on a different grid")
    m1, k1 = reference_blocks(tuple(grid.spacing))
    M = assemble_scaled(grid, m1, material.rho)
    C = assemble_scaled(grid, k1, material.eta)
    K = assemble_scaled(grid, k1, material.mu)
    return M, C, K


@dataclass(frozen=True)
class DirichletSpec:
    face: str = "x0"
    amplitude: tuple[float, float, float] = (0.0, 0.0, 1e-4)
    omega: float = 2 * np.pi * 50.0
    alpha_pen: float = 1e7
    ramp_periods: float = 0.0  # smooth amplitude ramp-in; 0 gives the bare sine

    def __post_init__(self):
        _parse_face(self.face)
        if self.ramp_periods < 0:
            raise AssemblyError("ramp_periods must be >= 0")
        if not self.alpha_pen > 0:
            raise AssemblyError("alpha_pen must be > 0")
        if not np.all(np.isfinite(self.amplitude)):
            raise AssemblyError("amplitude must be finite")

    def envelope(self, t: float) -> float:
        """C1 ramp sin^2(pi t / 2 T_r) up to ``T_r = ramp_periods`` drive periods, then 1."""
        t_ramp = self.ramp_periods * 2.0 * np.pi / self.omega
        if t_ramp <= 0 or t >= t_ramp:
            return 1.0
        return float(np.sin(0.5 * np.pi * max(t, 0.0) / t_ramp) ** 2)

    def signal(self, t: float) -> float:
        return self.envelope(t) * float(np.sin(self.omega * t))

    def boundary_value(self, t: float) -> np.ndarray:
        return np.asarray(self.amplitude, float) * self.signal(t)


def face_element_size(grid: Grid, face: str) -> float:
    axis, _ = _parse_face(face)
    h = np.delete(grid.spacing, axis)
    return float(np.min(h))


@lru_cache(maxsize=16)
def face_mass(grid: Grid, face: str) -> sp.csr_matrix:
    """Scalar consistent face mass ``int_face N_a N_b`` over the node set (n_nodes^2)."""
    axis, side = _parse_face(face)
    tang = [d for d in range(3) if d != axis]
    h1, h2 = grid.spacing[tang]
    if h1 * h2 <= 0:
        raise AssemblyError("zero-measure face")
    # bilinear face element, corners ordered (0,0),(1,0),(0,1),(1,1)
    m1d = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    m4 = np.kron(m1d * h2, m1d * h1)
    n1 = grid.nodes_per_axis[tang[0]]
    n2 = grid.nodes_per_axis[tang[1]]
    fixed = 0 if side == 0 else grid.nodes_per_axis[axis] - 1
    i1, i2 = np.meshgrid(np.arange(n1 - 1), np.arange(n2 - 1), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    corners = []
    for c2 in (0, 1):
        for c1 in (0, 1):
            ijk = [None, None, None]
            ijk[axis] = np.full_like(i1, fixed)
            ijk[tang[0]] = i1 + c1
            ijk[tang[1]] = i2 + c2
            corners.append(grid.node_index(*ijk))
    corners = np.stack(corners, axis=1)  # (n_face_el, 4)
    rows = np.repeat(corners, 4, axis=1).ravel()
    cols = np.tile(corners, (1, 4)).ravel()
    data = np.tile(m4.ravel(), len(corners))
    n = grid.n_nodes
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def penalty_contributions(grid: Grid, spec: DirichletSpec, t: float):
    """``(K_pen, f_pen(t))`` of the weak Dirichlet penalty on ``spec.face``."""
    K_pen, f_unit = penalty_operator(grid, spec)
    return K_pen, spec.signal(t) * f_unit


@lru_cache(maxsize=16)
def penalty_operator(grid: Grid, spec: DirichletSpec):
    """Time-invariant penalty matrix and the force vector at ``sin(omega t) = 1``."""
    scale = spec.alpha_pen / face_element_size(grid, spec.face)
    mf = face_mass(grid, spec.face)
    K_pen = sp.kron(scale * mf, sp.identity(3), format="csr")
    lumped = np.asarray(mf.sum(axis=1)).ravel()
    f_unit = scale * np.outer(lumped, np.asarray(spec.amplitude, float)).ravel()
    return K_pen, f_unit


@dataclass(frozen=True)
class AbsorbingSpec:
    thickness: float = 0.01
    alpha: float = 0.05
    faces: tuple[str, ...] = ("x1", "y0", "y1", "z0", "z1")

    def __post_init__(self):
        for f in self.faces:
            _parse_face(f)
        if not self.alpha >= 0:
            raise AssemblyError("alpha_abs must be >= 0")
        if not self.thickness > 0:
            raise AssemblyError("layer thickness must be > 0")

    def validate(self, grid: Grid):
        if self.thickness >= 0.5 * min(grid.extent):
            raise AssemblyError(
                f"layer thickness {self.thickness} must be below half the smallest extent"
            )


def layer_elements(grid: Grid, spec: AbsorbingSpec) -> np.ndarray:
    """Boolean mask of elements whose centroid lies within the layer of a covered face."""
    c = grid.element_centroids
    ext = np.asarray(grid.extent)
    inside = np.zeros(grid.n_elements, dtype=bool)
    for face in spec.faces:
        axis, side = _parse_face(face)
        dist = c[:, axis] if side == 0 else ext[axis] - c[:, axis]
        inside |= dist <= spec.thickness * (1 + 1e-12)
    return inside


def layer_nodes(grid: Grid, spec: AbsorbingSpec) -> np.ndarray:
    """Boolean node mask: nodes within ``thickness`` of a covered face."""
    x = grid.node_coords
    ext = np.asarray(grid.extent)
    inside = np.zeros(grid.n_nodes, dtype=bool)
    for face in spec.faces:
        axis, side = _parse_face(face)
        dist = x[:, axis] if side == 0 else ext[axis] - x[:, axis]
        inside |= dist < spec.thickness * (1 - 1e-12)
    return inside


def absorbing_augment(C, grid: Grid, material: MaterialField, spec: AbsorbingSpec):
    """``C + alpha_abs * C_layer`` with ``C_layer = C / H_l`` on layer elements."""
    spec.validate(grid)
    if spec.alpha == 0 or not spec.faces:
        return C
    layer = layer_elements(grid, spec)
    if not layer.any():
        warnings.warn(
            f"absorbing layer of thickness {spec.thickness} contains no element centroid",
            stacklevel=2,
        )
        return C
    _, k1 = reference_blocks(tuple(grid.spacing))
    coef = np.where(layer, material.eta * spec.alpha / spec.thickness, 0.0)
    return C + assemble_scaled(grid, k1, coef)


def rigid_body_modes(grid: Grid) -> np.ndarray:
    """(n_dofs, 6) translations and infinitesimal rotations about the domain centre."""
    x = grid.node_coords - 0.5 * np.asarray(grid.extent)
    n = grid.n_nodes
    modes = np.zeros((n, 3, 6))
    for i in range(3):
        modes[:, i, i] = 1.0
    for r, (a, b) in enumerate([(0, 1), (1, 2), (2, 0)]):
        modes[:, a, 3 + r] = -x[:, b]
        modes[:, b, 3 + r] = x[:, a]
    return modes.reshape(3 * n, 6)


@dataclass
class SystemMatrices:
    """Assembled system with boundary terms folded in."""

    M: sp.csr_matrix
    C: sp.csr_matrix
    K: sp.csr_matrix
    f_pen_unit: np.ndarray = field(repr=False)
    dirichlet: DirichletSpec | None = None


def build_system(grid, material, dirichlet: DirichletSpec, absorbing: AbsorbingSpec | None):
    M, C, K = assemble_global(grid, material)
    if absorbing is not None:
        C = absorbing_augment(C, grid, material, absorbing)
    K_pen, f_unit = penalty_operator(grid, dirichlet)
    return SystemMatrices(M, C.tocsr(), (K + K_pen).tocsr(), f_unit, dirichlet)
