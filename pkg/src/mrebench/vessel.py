"""Pulsating line inclusions loaded through a virtual cylinder surface.

The vessel wall is not meshed.  Its lateral surface is sampled by point quadrature and
the pressure traction ``sigma . n_v = -p(t) n_v`` is lumped onto the tissue nodes of the
elements hosting each quadrature point.  End caps carry no traction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, locate_points, shape_values


class VesselError(ValueError):
    pass


@dataclass(frozen=True)
class VesselSpec:
    centerline: tuple[tuple[float, float, float], ...]
    radius: float
    p_mean: float = 12500.0
    p_amp: float = 2000.0
    f_pulse: float = 1.0
    phase: float = 0.0  # rad, added to the pulsation argument
    frozen_phase: float | None = None  # hold p at this pulsation phase (rad) when set
    n_axial: int = 2
    n_circumferential: int = 16

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise VesselError("centerline needs at least two 3-vector points")
        if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0):
            raise VesselError("centerline has a zero-length segment")
        if not self.radius > 0:
            raise VesselError("radius must be > 0")
        if not (self.p_mean >= self.p_amp >= 0):
            raise VesselError("need p_mean >= p_amp >= 0")
        if self.f_pulse < 0:
            raise VesselError("f_pulse must be >= 0")
        if self.n_axial < 1 or self.n_circumferential < 3:
            raise VesselError("need n_axial >= 1 and n_circumferential >= 3")

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.centerline, dtype=float)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def validate(self, grid: Grid):
        """Geometric checks: centerline inside the domain and the tube clear of the walls."""
        ext = np.asarray(grid.extent)
        pts = self.points
        tol = 1e-12 * ext
        if np.any(pts < -tol) or np.any(pts > ext + tol):
            raise VesselError("vessel centerline leaves the domain")
        for a, b in zip(pts[:-1], pts[1:]):
            d = (b - a) / np.linalg.norm(b - a)
            # half-width of a radius-R circle normal to d, projected on each axis
            reach = self.radius * np.sqrt(np.clip(1.0 - d**2, 0.0, None))
            for p in (a, b):
                clearance = np.minimum(p, ext - p)
                bad = (reach > 0) & (reach >= clearance - tol)
                if np.any(bad):
                    axis = "xyz"[int(np.flatnonzero(bad)[0])]
                    raise VesselError(
                        f"vessel radius {self.radius} reaches the domain boundary along {axis}"
                    )
        if self.radius < float(np.min(grid.spacing)):
            warnings.warn(
                f"vessel radius {self.radius} is below one element spacing; "
                "the surface is under-resolved",
                stacklevel=2,
            )


def pressure(spec: VesselSpec, t) -> np.ndarray | float:
    """p(t) = p_mean + p_amp sin(2 pi f_pulse t + phase), or the frozen-phase value."""
    if spec.frozen_phase is not None:
        return spec.p_mean + spec.p_amp * math.sin(spec.frozen_phase)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise VesselError("time must be >= 0")
    p = spec.p_mean + spec.p_amp * np.sin(2.0 * np.pi * spec.f_pulse * t + spec.phase)
    return float(p) if p.ndim == 0 else p


@dataclass
class SurfaceQuadrature:
    points: np.ndarray = field(repr=False)  # (q, 3)
    normals: np.ndarray = field(repr=False)  # (q, 3), unit, vessel -> tissue
    weights: np.ndarray = field(repr=False)  # (q,), m^2
    elements: np.ndarray = field(repr=False)  # (q,)
    xi: np.ndarray = field(repr=False)  # (q, 3)

    @property
    def area(self) -> float:
        return float(self.weights.sum())


def _frame(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.eye(3)[int(np.argmin(np.abs(d)))]
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2 / np.linalg.norm(e2)


def discretize_vessel(
    grid: Grid, spec: VesselSpec, n_axial: int | None = None, n_circumferential: int | None = None
) -> SurfaceQuadrature:
    """Midpoint quadrature on the lateral cylinder surface around each centerline segment.

    Each segment gets ``n_axial`` stations per element it crosses (counted along the
    segment direction) and ``n_circumferential`` equal angular patches per station.
    """
    spec.validate(grid)
    n_ax = spec.n_axial if n_axial is None else n_axial
    n_c = spec.n_circumferential if n_circumferential is None else n_circumferential
    h = grid.spacing
    theta = 2.0 * np.pi * (np.arange(n_c) + 0.5) / n_c
    pts, nrm, wts = [], [], []
    for a, b in zip(spec.points[:-1], spec.points[1:]):
        seg = b - a
        length = np.linalg.norm(seg)
        d = seg / length
        crossed = max(1, math.ceil(float(np.max(np.abs(seg) / h)) - 1e-9))
        n_st = n_ax * crossed
        s = (np.arange(n_st) + 0.5) / n_st
        centres = a + s[:, None] * seg
        e1, e2 = _frame(d)
        normals = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2  # (n_c, 3)
        pts.append((centres[:, None, :] + spec.radius * normals[None, :, :]).reshape(-1, 3))
        nrm.append(np.broadcast_to(normals, (n_st, n_c, 3)).reshape(-1, 3))
        wts.append(np.full(n_st * n_c, (length / n_st) * (2.0 * np.pi * spec.radius / n_c)))
    points = np.concatenate(pts)
    normals = np.concatenate(nrm)
    elements, xi = locate_points(grid, points)
    return SurfaceQuadrature(points, normals, np.concatenate(wts), elements, xi)


def unit_load(grid: Grid, quad: SurfaceQuadrature) -> np.ndarray:
    """Nodal force vector for p = 1 Pa: ``f_a = sum_q w_q n_q N_a(q)``."""
    nvals = shape_values(quad.xi)  # (q, 8)
    nodes = grid.element_nodes[quad.elements]  # (q, 8)
    contrib = (quad.weights[:, None, None] * nvals[:, :, None]) * quad.normals[:, None, :]
    f = np.zeros((grid.n_nodes, 3))
    for c in range(3):
        f[:, c] = np.bincount(nodes.ravel(), weights=contrib[:, :, c].ravel(), minlength=grid.n_nodes)
    return f.reshape(-1)


def vessel_load(grid: Grid, quad: SurfaceQuadrature, spec: VesselSpec, t: float) -> np.ndarray:
    return pressure(spec, t) * unit_load(grid, quad)


def distance_to_centerline(spec: VesselSpec, x: np.ndarray) -> np.ndarray:
    """Shortest distance from each point in ``x`` (n, 3) to the centerline polyline."""
    best = np.full(len(x), np.inf)
    for a, b in zip(spec.points[:-1], spec.points[1:]):
        seg = b - a
        s = np.clip(((x - a) @ seg) / (seg @ seg), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(x - (a + s[:, None] * seg), axis=1))
    return best
