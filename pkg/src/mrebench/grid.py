"""Structured hexahedral grid of a cuboid, nodal vector fields and trilinear shape functions.

Node ordering is ``(iz * ny + iy) * nx + ix`` (x fastest); element ordering follows the
same rule on the ``(nx-1, ny-1, nz-1)`` element lattice.  Local corners of an element are
numbered ``a = i + 2 j + 4 k`` with ``(i, j, k)`` in ``{0, 1}^3``, so corner 0 sits at
local coordinate ``(-1, -1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# local corner offsets (i, j, k), a = i + 2j + 4k
CORNERS = np.array([[i, j, k] for k in (0, 1) for j in (0, 1) for i in (0, 1)], dtype=np.int64)
# reference coordinates of the corners in [-1, 1]^3
CORNER_SIGNS = 2.0 * CORNERS - 1.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    extent: tuple[float, float, float]
    nodes_per_axis: tuple[int, int, int]

    def __post_init__(self):
        if len(self.extent) != 3 or len(self.nodes_per_axis) != 3:
            raise GridError("extent and nodes_per_axis must have three entries")
        if any(not np.isfinite(e) or e <= 0 for e in self.extent):
            raise GridError(f"extent must be positive, got {self.extent}")
        if any(int(n) != n or n < 2 for n in self.nodes_per_axis):
            raise GridError(f"need at least 2 nodes per axis, got {self.nodes_per_axis}")

    @property
    def spacing(self) -> np.ndarray:
        return np.asarray(self.extent, float) / (np.asarray(self.nodes_per_axis) - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        """Node lattice shape in array order ``(nz, ny, nx)``."""
        nx, ny, nz = self.nodes_per_axis
        return (nz, ny, nx)

    @property
    def elements_per_axis(self) -> tuple[int, int, int]:
        nx, ny, nz = self.nodes_per_axis
        return (nx - 1, ny - 1, nz - 1)

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.nodes_per_axis
        return nx * ny * nz

    @property
    def n_elements(self) -> int:
        ex, ey, ez = self.elements_per_axis
        return ex * ey * ez

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_nodes

    @property
    def element_volume(self) -> float:
        return float(np.prod(self.spacing))

    def node_index(self, ix, iy, iz):
        nx, ny, _ = self.nodes_per_axis
        return (np.asarray(iz) * ny + np.asarray(iy)) * nx + np.asarray(ix)

    def node_ijk(self, n):
        nx, ny, _ = self.nodes_per_axis
        n = np.asarray(n)
        return n % nx, (n // nx) % ny, n // (nx * ny)

    def element_index(self, ex, ey, ez):
        mx, my, _ = self.elements_per_axis
        return (np.asarray(ez) * my + np.asarray(ey)) * mx + np.asarray(ex)

    def element_ijk(self, e):
        mx, my, _ = self.elements_per_axis
        e = np.asarray(e)
        return e % mx, (e // mx) % my, e // (mx * my)

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, 3) physical coordinates in normative node order."""
        ix, iy, iz = self.node_ijk(np.arange(self.n_nodes))
        return np.stack([ix, iy, iz], axis=1) * self.spacing

    @cached_property
    def element_nodes(self) -> np.ndarray:
        """(n_elements, 8) global node indices of each element's corners."""
        ex, ey, ez = self.element_ijk(np.arange(self.n_elements))
        return np.stack(
            [self.node_index(ex + i, ey + j, ez + k) for i, j, k in CORNERS], axis=1
        )

    @cached_property
    def element_centroids(self) -> np.ndarray:
        ex, ey, ez = self.element_ijk(np.arange(self.n_elements))
        return (np.stack([ex, ey, ez], axis=1) + 0.5) * self.spacing

    def to_global(self, element: int, xi) -> np.ndarray:
        """Physical position of local coordinate ``xi`` inside ``element``."""
        ijk = np.array(self.element_ijk(element), dtype=float)
        return (ijk + 0.5 * (np.asarray(xi, float) + 1.0)) * self.spacing

    def boundary_nodes(self, face: str) -> np.ndarray:
        """Node indices on a face named ``x0``, ``x1``, ``y0``, ... (0 = lower side)."""
        axis, side = _parse_face(face)
        ijk = self.node_ijk(np.arange(self.n_nodes))
        target = 0 if side == 0 else self.nodes_per_axis[axis] - 1
        return np.flatnonzero(ijk[axis] == target)


FACES = ("x0", "x1", "y0", "y1", "z0", "z1")


def _parse_face(face: str) -> tuple[int, int]:
    if face not in FACES:
        raise GridError(f"unknown face {face!r}; expected one of {FACES}")
    return "xyz".index(face[0]), int(face[1])


def build_grid(extent, nodes_per_axis) -> Grid:
    return Grid(tuple(float(e) for e in extent), tuple(int(n) for n in nodes_per_axis))


@dataclass(frozen=True)
class ShapeEval:
    values: np.ndarray  # (8,)
    gradients: np.ndarray  # (8, 3), physical


def eval_shape(xi, spacing) -> ShapeEval:
    """Trilinear shape values and physical gradients at local coordinate ``xi``."""
    xi = np.asarray(xi, dtype=float)
    factors = 1.0 + CORNER_SIGNS * xi  # (8, 3)
    values = 0.125 * np.prod(factors, axis=1)
    grads = np.empty((8, 3))
    for d in range(3):
        others = [o for o in range(3) if o != d]
        grads[:, d] = 0.125 * CORNER_SIGNS[:, d] * factors[:, others[0]] * factors[:, others[1]]
    grads *= 2.0 / np.asarray(spacing, dtype=float)
    return ShapeEval(values, grads)


def shape_values(xi) -> np.ndarray:
    """Vectorised trilinear values for an (n, 3) batch of local coordinates -> (n, 8)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    return 0.125 * np.prod(1.0 + CORNER_SIGNS[None, :, :] * xi[:, None, :], axis=2)


def locate_point(grid: Grid, x, tol: float = 1e-12):
    """Return ``(element, xi)`` for a physical point; face points go to the lower element."""
    x = np.asarray(x, dtype=float)
    ext = np.asarray(grid.extent)
    slack = tol * ext
    if x.shape != (3,) or np.any(x < -slack) or np.any(x > ext + slack):
        raise GridError(f"point {x.tolist()} is outside the domain {grid.extent}")
    elements, xi = locate_points(grid, x[None, :])
    return int(elements[0]), xi[0]


def locate_points(grid: Grid, pts) -> tuple[np.ndarray, np.ndarray]:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = grid.spacing
    m = np.asarray(grid.elements_per_axis)
    s = np.clip(pts / h, 0.0, m.astype(float))
    # lower-index element on exact faces: ceil(s) - 1, clamped to the first element
    idx = np.clip(np.ceil(s).astype(np.int64) - 1, 0, m - 1)
    xi = np.clip(2.0 * (s - idx) - 1.0, -1.0, 1.0)
    return grid.element_index(idx[:, 0], idx[:, 1], idx[:, 2]), xi


@dataclass
class NodalVectorField:
    grid: Grid
    values: np.ndarray = field(repr=False)  # flat, length 3 * n_nodes, index 3 * node + c

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n_dofs,):
            raise GridError(
                f"field needs {self.grid.n_dofs} entries, got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid, dtype=float) -> "NodalVectorField":
        return cls(grid, np.zeros(grid.n_dofs, dtype=dtype))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "NodalVectorField":
        return cls(grid, np.asarray(fn(grid.node_coords)).reshape(-1))

    def as_nodes(self) -> np.ndarray:
        """(n_nodes, 3) view."""
        return self.values.reshape(-1, 3)

    def as_lattice(self) -> np.ndarray:
        """(nz, ny, nx, 3) view."""
        return self.values.reshape(*self.grid.shape, 3)


def interpolate(field: NodalVectorField, element: int, xi) -> np.ndarray:
    n = eval_shape(xi, field.grid.spacing).values
    return n @ field.as_nodes()[field.grid.element_nodes[element]]


def interpolate_points(field: NodalVectorField, pts) -> np.ndarray:
    """Interpolate at many physical points at once -> (n, 3)."""
    elements, xi = locate_points(field.grid, pts)
    nodes = field.grid.element_nodes[elements]  # (n, 8)
    vals = field.as_nodes()[nodes]  # (n, 8, 3)
    return np.einsum("na,nac->nc", shape_values(xi), vals)
