"""Algebraic direct inversion of harmonic displacement data for the complex shear modulus.

Pipeline: harmonic extraction at the drive frequency -> optional curl filter ->
finite-difference Laplacian -> pointwise least-squares modulus -> region statistics.

Sign convention: the Helmholtz relation ``rho w^2 u + G* Lap u = 0`` gives
``G* = -rho w^2 u / Lap u``, which is positive (storage and loss) for a damped plane wave.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid


class InversionError(ValueError):
    pass


class StencilKind(str, enum.Enum):
    standard = "standard"
    nested = "nested"

    @property
    def margin(self) -> int:
        return 1 if self is StencilKind.standard else 2


@dataclass
class SpectralField:
    grid: Grid
    values: np.ndarray = field(repr=False)  # (n_nodes, 3) complex
    omega: float = 2 * np.pi * 50.0
    valid: np.ndarray | None = field(default=None, repr=False)  # (n_nodes,) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.grid.n_nodes, 3)
        if not self.omega > 0:
            raise InversionError("omega must be > 0")
        if not np.all(np.isfinite(self.values)):
            raise InversionError("spectral field has non-finite entries")
        if self.valid is None:
            self.valid = np.ones(self.grid.n_nodes, dtype=bool)

    def lattice(self) -> np.ndarray:
        return self.values.reshape(*self.grid.shape, 3)


@dataclass
class Elastogram:
    grid: Grid
    modulus: np.ndarray = field(repr=False)  # (n_nodes,) complex, NaN where invalid
    valid: np.ndarray = field(repr=False)  # (n_nodes,) bool
    omega: float = 2 * np.pi * 50.0
    stencil: str = StencilKind.nested.value

    @property
    def storage(self) -> np.ndarray:
        return self.modulus.real

    @property
    def loss(self) -> np.ndarray:
        return self.modulus.imag


def extract_harmonic(samples: np.ndarray, times: np.ndarray, omega: float, grid: Grid,
                     rtol: float = 1e-6) -> SpectralField:
    """Complex amplitude ``c = (2/N) sum_n u(t_n) exp(-i w t_n)`` over a whole-period window.

    For ``u = A sin(w t + phi)`` this returns ``A exp(i (phi - pi/2))``.
    """
    samples = np.asarray(samples, dtype=float)
    times = np.asarray(times, dtype=float)
    n = len(times)
    if samples.shape[0] != n:
        raise InversionError("one snapshot per sample time is required")
    if n < 2:
        raise InversionError("need at least two samples")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=rtol, atol=0):
        raise InversionError("samples are not uniformly spaced")
    periods = n * dt[0] * omega / (2 * np.pi)
    if abs(periods - round(periods)) > 1e-6 * max(1.0, periods) or round(periods) < 1:
        raise InversionError(f"window spans {periods:.6g} drive periods, need an integer")
    if n / round(periods) < 4:
        raise InversionError("fewer than 4 samples per period")
    phase = np.exp(-1j * omega * times)
    c = (2.0 / n) * np.tensordot(phase, samples, axes=(0, 0))
    return SpectralField(grid, c.reshape(grid.n_nodes, 3), omega)


def harmonic_from_history(history) -> SpectralField:
    return extract_harmonic(history.samples, history.times, history.omega, history.grid)


def _interior(shape, margin: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    if all(s > 2 * margin for s in shape):
        mask[tuple(slice(margin, s - margin) for s in shape)] = True
    return mask


def gradient(u: np.ndarray, spacing, axis: int) -> np.ndarray:
    """Central difference ``(u[i+1] - u[i-1]) / 2h`` along a lattice axis (x, y or z).

    Edge layers use one-sided differences and must be masked by the caller.
    """
    arr_axis = 2 - axis  # lattice arrays are (nz, ny, nx, ...)
    return np.gradient(u, spacing[axis], axis=arr_axis)


def curl_filter(spectral: SpectralField) -> SpectralField:
    """Curl of the complex field with central differences; edge nodes flagged invalid."""
    g = spectral.grid
    if min(g.nodes_per_axis) < 3:
        raise InversionError("curl filter needs at least 3 nodes per axis")
    u = spectral.lattice()
    h = g.spacing
    d = [[gradient(u[..., c], h, ax) for ax in range(3)] for c in range(3)]  # d[c][ax]
    q = np.stack(
        [d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]], axis=-1
    ).reshape(-1, 3)
    valid = spectral.valid & _interior(g.shape, 1).ravel()
    return SpectralField(g, q, spectral.omega, valid)


def laplacian(spectral: SpectralField, kind: StencilKind | str = StencilKind.nested):
    """Component-wise Laplacian; returns ``(values (n, 3), valid (n,))``.

    ``standard``: ``(u[i+1] - 2u[i] + u[i-1]) / h^2``; ``nested``: the central gradient
    applied twice, ``(u[i+2] - 2u[i] + u[i-2]) / 4h^2``.  Nodes too close to the
    boundary for the stencil are flagged invalid and hold NaN.
    """
    kind = StencilKind(kind)
    g = spectral.grid
    u = spectral.lattice()
    s = kind.margin
    h = g.spacing
    out = np.zeros_like(u)
    for axis in range(3):
        a = 2 - axis
        n = u.shape[a]
        if n <= 2 * s:
            continue
        centre = [slice(None)] * 4
        plus = [slice(None)] * 4
        minus = [slice(None)] * 4
        centre[a] = slice(s, n - s)
        plus[a] = slice(2 * s, n)
        minus[a] = slice(0, n - 2 * s)
        denom = (s * h[axis]) ** 2
        out[tuple(centre)] += (u[tuple(plus)] - 2.0 * u[tuple(centre)] + u[tuple(minus)]) / denom
    valid = _interior(g.shape, s).ravel()
    # stencil reach of invalid input nodes propagates
    if not spectral.valid.all():
        bad = ~spectral.valid.reshape(g.shape)
        spread = bad.copy()
        for axis in range(3):
            for shift in (-s, s):
                spread |= np.roll(bad, shift, axis=axis)
        valid &= ~spread.ravel()
    out = out.reshape(-1, 3)
    out[~valid] = np.nan
    return out, valid


def invert(spectral: SpectralField, lap: np.ndarray, rho, valid: np.ndarray | None = None,
           threshold: float = 1e-12, stencil: str = StencilKind.nested.value) -> Elastogram:
    """Pointwise least-squares modulus over the three components.

    ``G* = -rho w^2 sum_j u_j conj(L_j) / sum_j |L_j|^2``; nodes whose ``sum_j |L_j|^2``
    falls below ``threshold`` times its maximum are masked.
    """
    g = spectral.grid
    lap = np.asarray(lap).reshape(g.n_nodes, 3)
    ok = np.ones(g.n_nodes, dtype=bool) if valid is None else np.asarray(valid, bool).copy()
    ok &= spectral.valid & np.all(np.isfinite(lap), axis=1)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (g.n_nodes,))
    lap0 = np.where(ok[:, None], lap, 0.0)
    den = np.sum(np.abs(lap0) ** 2, axis=1)
    peak = den[ok].max() if ok.any() else 0.0
    ok &= den > threshold * peak
    if not ok.any():
        raise InversionError("every voxel is masked; degenerate input field")
    num = np.sum(spectral.values * np.conj(lap0), axis=1)
    G = np.full(g.n_nodes, np.nan + 1j * np.nan)
    G[ok] = -rho[ok] * spectral.omega**2 * num[ok] / den[ok]
    return Elastogram(g, G, ok, spectral.omega, str(StencilKind(stencil).value))


def boundary_margin_mask(grid: Grid, margin: int) -> np.ndarray:
    """True for nodes at least ``margin`` nodes away from every face."""
    return _interior(grid.shape, margin).ravel()


@dataclass
class RegionStats:
    count: int
    storage: float
    loss: float
    storage_in: float
    loss_in: float

    @property
    def storage_error(self) -> float:
        """Signed relative error of the storage modulus in percent."""
        return 100.0 * (self.storage - self.storage_in) / self.storage_in

    @property
    def loss_error(self) -> float:
        return 100.0 * (self.loss - self.loss_in) / self.loss_in if self.loss_in else float("nan")

    @property
    def delta_storage(self) -> float:
        return abs(self.storage_error)

    @property
    def delta_loss(self) -> float:
        return abs(self.loss_error)

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "storage": self.storage,
            "loss": self.loss,
            "storage_in": self.storage_in,
            "loss_in": self.loss_in,
            "delta_storage_pct": self.delta_storage,
            "delta_loss_pct": self.delta_loss,
            "signed_storage_pct": self.storage_error,
            "signed_loss_pct": self.loss_error,
        }


def region_stats(elastogram: Elastogram, region: np.ndarray, expected: complex,
                 boundary_margin: int = 0) -> RegionStats:
    """Arithmetic means of G' and G'' over valid voxels of ``region``."""
    sel = np.asarray(region, bool) & elastogram.valid
    if boundary_margin:
        sel &= boundary_margin_mask(elastogram.grid, boundary_margin)
    if not sel.any():
        raise InversionError("region is empty after masking")
    G = elastogram.modulus[sel]
    return RegionStats(int(sel.sum()), float(G.real.mean()), float(G.imag.mean()),
                       float(np.real(expected)), float(np.imag(expected)))
