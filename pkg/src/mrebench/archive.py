"""Binary field archives and delimited-text slice exports.

An archive is a pair ``<stem>.bin`` + ``<stem>.json``.  The binary holds little-endian
float64 values laid out sample-major, then node (normative node order), then component:
byte length is ``8 * 3 * n_nodes * n_samples``.  The JSON sidecar carries dimensions,
spacing, ordering, units, sample times and a SHA-256 checksum of the binary.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, build_grid
from .integrator import DisplacementHistory
from .inversion import Elastogram, SpectralField

FORMAT = "mrebench-field"
FORMAT_VERSION = 1
ORDERING = "sample-major; node = (iz*ny + iy)*nx + ix; value = 3*node + component"
MASKED = "masked"


class ArchiveError(OSError):
    pass


@dataclass
class FieldArchive:
    kind: str  # history | spectral | elastogram
    grid: Grid
    data: np.ndarray = field(repr=False)  # (n_samples, n_nodes, 3) float64
    times: list[float] = field(default_factory=list)
    components: list[str] = field(default_factory=lambda: ["x", "y", "z"])
    units: str = "m"
    frequency: float | None = None
    metadata: dict = field(default_factory=dict)

    def sidecar(self, checksum: str) -> dict:
        g = self.grid
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "dims": list(g.nodes_per_axis),
            "extent": list(g.extent),
            "spacing": [float(h) for h in g.spacing],
            "ordering": ORDERING,
            "dtype": "<f8",
            "n_samples": int(self.data.shape[0]),
            "components": self.components,
            "units": self.units,
            "times": [float(t) for t in self.times],
            "frequency_hz": self.frequency,
            "sha256": checksum,
            "metadata": self.metadata,
        }

    # -- conversions ------------------------------------------------------------------
    def to_history(self) -> DisplacementHistory:
        self._expect("history")
        samples = self.data.reshape(self.data.shape[0], -1)
        return DisplacementHistory(self.grid, np.asarray(self.times), samples,
                                   self.frequency or 0.0, dict(self.metadata))

    def to_spectral(self) -> SpectralField:
        self._expect("spectral")
        values = self.data[0] + 1j * self.data[1]
        return SpectralField(self.grid, values, 2 * np.pi * self.frequency)

    def to_elastogram(self) -> Elastogram:
        self._expect("elastogram")
        storage, loss, valid = self.data[0].T
        ok = valid > 0.5
        G = np.where(ok, storage + 1j * loss, np.nan + 1j * np.nan)
        return Elastogram(self.grid, G, ok, 2 * np.pi * self.frequency,
                          self.metadata.get("stencil", "nested"))

    def _expect(self, kind: str):
        if self.kind != kind:
            raise ArchiveError(f"archive holds a {self.kind} field, not {kind}")


def history_archive(h: DisplacementHistory, metadata: dict | None = None) -> FieldArchive:
    data = np.asarray(h.samples, dtype=float).reshape(len(h.times), h.grid.n_nodes, 3)
    return FieldArchive("history", h.grid, data, list(map(float, h.times)), units="m",
                        frequency=h.frequency, metadata=metadata or {})


def spectral_archive(s: SpectralField, metadata: dict | None = None) -> FieldArchive:
    data = np.stack([s.values.real, s.values.imag])
    meta = {"blocks": ["real", "imag"], **(metadata or {})}
    return FieldArchive("spectral", s.grid, data, [], units="m",
                        frequency=s.omega / (2 * np.pi), metadata=meta)


def elastogram_archive(e: Elastogram, metadata: dict | None = None) -> FieldArchive:
    data = np.stack([e.storage, e.loss, e.valid.astype(float)], axis=1)[None]
    meta = {"stencil": e.stencil, "masked_value": "NaN; valid component is 0", **(metadata or {})}
    return FieldArchive("elastogram", e.grid, data, [],
                        components=["storage", "loss", "valid"], units="Pa",
                        frequency=e.omega / (2 * np.pi), metadata=meta)


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".bin", ".json") else path


def write_archive(archive: FieldArchive, path) -> Path:
    """Write ``<path>.bin`` and ``<path>.json``; returns the stem."""
    data = np.ascontiguousarray(archive.data, dtype="<f8")
    if data.ndim != 3 or data.shape[1:] != (archive.grid.n_nodes, 3):
        raise ArchiveError(f"archive data has shape {data.shape}")
    if archive.kind == "history" and not np.all(np.isfinite(data)):
        raise ArchiveError("history archive has non-finite values")
    raw = data.tobytes()
    stem = _stem(path)
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".bin").write_bytes(raw)
        sidecar = archive.sidecar(hashlib.sha256(raw).hexdigest())
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ArchiveError(f"cannot write archive {stem}: {exc}") from exc
    return stem


def export_fields(obj, path, metadata: dict | None = None) -> Path:
    if isinstance(obj, DisplacementHistory):
        arc = history_archive(obj, metadata)
    elif isinstance(obj, SpectralField):
        arc = spectral_archive(obj, metadata)
    elif isinstance(obj, Elastogram):
        arc = elastogram_archive(obj, metadata)
    elif isinstance(obj, FieldArchive):
        arc = obj
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    return write_archive(arc, path)


def read_archive(path) -> FieldArchive:
    stem = _stem(path)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text())
        raw = stem.with_suffix(".bin").read_bytes()
    except (OSError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"cannot read archive {stem}: {exc}") from exc
    if meta.get("format") != FORMAT:
        raise ArchiveError(f"{stem}.json is not a {FORMAT} sidecar")
    if hashlib.sha256(raw).hexdigest() != meta["sha256"]:
        raise ArchiveError(f"checksum mismatch for {stem}.bin")
    grid = build_grid(meta["extent"], meta["dims"])
    n_samples = int(meta["n_samples"])
    if len(raw) != 8 * 3 * grid.n_nodes * n_samples:
        raise ArchiveError(f"{stem}.bin has {len(raw)} bytes, expected "
                           f"{8 * 3 * grid.n_nodes * n_samples}")
    data = np.frombuffer(raw, dtype="<f8").reshape(n_samples, grid.n_nodes, 3).copy()
    return FieldArchive(meta["kind"], grid, data, meta.get("times", []),
                        meta.get("components", ["x", "y", "z"]), meta.get("units", ""),
                        meta.get("frequency_hz"), meta.get("metadata", {}))


def _plane_nodes(grid: Grid, axis: int, index: int) -> np.ndarray:
    n = grid.nodes_per_axis
    if not 0 <= index < n[axis]:
        raise ArchiveError(f"plane index {index} outside 0..{n[axis] - 1} along {'xyz'[axis]}")
    lat = np.arange(grid.n_nodes).reshape(grid.shape)  # (nz, ny, nx)
    sl = [slice(None)] * 3
    sl[2 - axis] = index
    return lat[tuple(sl)].ravel()  # row-major over the remaining (slow, fast) axes


def export_slice(obj, axis, index: int, path, sample: int = -1) -> Path:
    """Write one lattice plane as CSV: coordinates plus G', G'' (or |u|).

    Masked elastogram voxels carry the literal token ``masked``.
    """
    if isinstance(axis, str):
        axis = "xyz".index(axis)
    if isinstance(obj, FieldArchive):
        obj = {"history": obj.to_history, "spectral": obj.to_spectral,
               "elastogram": obj.to_elastogram}[obj.kind]()
    grid = obj.grid
    nodes = _plane_nodes(grid, axis, index)
    xyz = grid.node_coords[nodes]
    rows = []
    if isinstance(obj, Elastogram):
        header = ["x", "y", "z", "storage_Pa", "loss_Pa"]
        for p, n in zip(xyz, nodes):
            if obj.valid[n]:
                vals = [repr(float(obj.storage[n])), repr(float(obj.loss[n]))]
            else:
                vals = [MASKED, MASKED]
            rows.append([*map(repr, map(float, p)), *vals])
    else:
        if isinstance(obj, SpectralField):
            mag = np.sqrt(np.sum(np.abs(obj.values) ** 2, axis=1))
            header = ["x", "y", "z", "abs_u_harmonic_m"]
        elif isinstance(obj, DisplacementHistory):
            u = obj.samples[sample].reshape(-1, 3)
            mag = np.linalg.norm(u, axis=1)
            header = ["x", "y", "z", "abs_u_m"]
        else:
            raise TypeError(f"cannot slice {type(obj).__name__}")
        rows = [[*map(repr, map(float, p)), repr(float(mag[n]))] for p, n in zip(xyz, nodes)]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise ArchiveError(f"cannot write slice {path}: {exc}") from exc
    return path


def read_slice(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
