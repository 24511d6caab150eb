"""Kelvin-Voigt material fields over the element lattice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class KelvinVoigt:
    mu: float  # shear modulus, Pa
    eta: float  # shear viscosity, Pa s
    rho: float  # density, kg/m^3

    def __post_init__(self):
        for name in ("mu", "eta", "rho"):
            if not np.isfinite(getattr(self, name)):
                raise MaterialError(f"{name} must be finite")
        if self.mu <= 0:
            raise MaterialError(f"mu must be > 0, got {self.mu}")
        if self.eta < 0:
            raise MaterialError(f"eta must be >= 0, got {self.eta}")
        if self.rho <= 0:
            raise MaterialError(f"rho must be > 0, got {self.rho}")


DEFAULT_MATERIAL = KelvinVoigt(mu=2500.0, eta=1.0, rho=1000.0)


def complex_modulus(m: KelvinVoigt, omega: float) -> complex:
    """G* = mu + i omega eta (storage = mu, loss = omega eta)."""
    if omega < 0:
        raise MaterialError("omega must be >= 0")
    return complex(m.mu, omega * m.eta)


def shear_wavenumber(m: KelvinVoigt, omega: float) -> complex:
    """Complex wavenumber k* = omega sqrt(rho / G*) of a Kelvin-Voigt shear wave."""
    return omega * np.sqrt(m.rho / complex_modulus(m, omega))


@dataclass(frozen=True)
class ZoneSpec:
    lower: tuple[float, float, float]
    upper: tuple[float, float, float]
    material: KelvinVoigt
    name: str = ""

    def contains(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))


@dataclass
class MaterialField:
    grid: Grid
    zones: list[KelvinVoigt]
    zone_id: np.ndarray = field(repr=False)  # (n_elements,) int
    zone_names: list[str] = field(default_factory=list)

    def _per_element(self, attr: str) -> np.ndarray:
        return np.array([getattr(z, attr) for z in self.zones])[self.zone_id]

    @property
    def mu(self) -> np.ndarray:
        return self._per_element("mu")

    @property
    def eta(self) -> np.ndarray:
        return self._per_element("eta")

    @property
    def rho(self) -> np.ndarray:
        return self._per_element("rho")

    def element_material(self, e: int) -> KelvinVoigt:
        return self.zones[self.zone_id[e]]

    @property
    def is_uniform(self) -> bool:
        return len(set(self.zones[i] for i in np.unique(self.zone_id))) == 1

    def nodal_rho(self) -> np.ndarray:
        """Density at nodes: mean over the elements sharing each node."""
        g = self.grid
        acc = np.zeros(g.n_nodes)
        cnt = np.zeros(g.n_nodes)
        rho = self.rho
        for a in range(8):
            np.add.at(acc, g.element_nodes[:, a], rho)
            np.add.at(cnt, g.element_nodes[:, a], 1.0)
        return acc / cnt

    def nodal_zone(self) -> np.ndarray:
        """Zone id at nodes, or -1 where elements of different zones meet."""
        g = self.grid
        lo = np.full(g.n_nodes, np.iinfo(np.int64).max)
        hi = np.full(g.n_nodes, -1)
        for a in range(8):
            np.minimum.at(lo, g.element_nodes[:, a], self.zone_id)
            np.maximum.at(hi, g.element_nodes[:, a], self.zone_id)
        return np.where(lo == hi, lo, -1)


def uniform_material(grid: Grid, m: KelvinVoigt) -> MaterialField:
    if not isinstance(m, KelvinVoigt):
        raise MaterialError("expected a KelvinVoigt material")
    return MaterialField(grid, [m], np.zeros(grid.n_elements, dtype=np.int64), ["uniform"])


def zoned_material(grid: Grid, zones: list[ZoneSpec], rtol: float = 1e-9) -> MaterialField:
    """Assign each element to the zone containing its centroid.

    Zones must tile the domain: pairwise overlaps of positive volume or any uncovered
    element centroid are errors.
    """
    if not zones:
        raise MaterialError("at least one zone is required")
    ext = np.asarray(grid.extent)
    tol = rtol * ext
    names = [z.name or f"zone{i}" for i, z in enumerate(zones)]
    for z, name in zip(zones, names):
        lo, hi = np.asarray(z.lower), np.asarray(z.upper)
        if np.any(hi <= lo):
            raise MaterialError(f"zone {name!r} has an empty box")
        if np.any(lo < -tol) or np.any(hi > ext + tol):
            raise MaterialError(f"zone {name!r} extends outside the domain")
    for i in range(len(zones)):
        for j in range(i + 1, len(zones)):
            a, b = zones[i], zones[j]
            overlap = np.minimum(a.upper, b.upper) - np.maximum(a.lower, b.lower)
            if np.all(overlap > tol):
                raise MaterialError(f"zones {names[i]!r} and {names[j]!r} overlap")
    total = sum(z.volume for z in zones)
    if abs(total - float(np.prod(ext))) > 1e-6 * float(np.prod(ext)):
        raise MaterialError(
            f"zones do not tile the domain (covered volume {total:.6g} of {np.prod(ext):.6g})"
        )
    zone_id = np.full(grid.n_elements, -1, dtype=np.int64)
    centroids = grid.element_centroids
    for i, z in enumerate(zones):
        hit = z.contains(centroids) & (zone_id < 0)
        zone_id[hit] = i
    if np.any(zone_id < 0):
        raise MaterialError("some elements are not covered by any zone")
    return MaterialField(grid, [z.material for z in zones], zone_id, names)
