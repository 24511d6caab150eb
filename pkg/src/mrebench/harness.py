"""Experiment engine: closed-loop scenario runs and resolution sweeps.

A scenario run is forward simulation -> harmonic extraction -> direct inversion ->
per-zone error table, with every artifact and a manifest written to one directory.
"""

from __future__ import annotations

import concurrent.futures as cf
import hashlib
import json
import logging
import math
import os
import platform
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .archive import export_fields, export_slice, read_archive
from .assembly import layer_nodes
from .config import ConfigError, ScenarioConfig, dump_config
from .grid import Grid, NodalVectorField, interpolate_points
from .integrator import DisplacementHistory, simulate
from .inversion import (
    Elastogram,
    RegionStats,
    SpectralField,
    StencilKind,
    boundary_margin_mask,
    curl_filter,
    extract_harmonic,
    invert,
    laplacian,
    region_stats,
)
from .material import MaterialField, complex_modulus
from .vessel import distance_to_centerline

log = logging.getLogger(__name__)

WORKERS_ENV = "MREBENCH_WORKERS"
DESK_NODE_CAP = 75
MANIFEST_FORMAT = "mrebench-manifest"
DETERMINISM_NOTE = (
    "no random numbers are drawn; assembly, solves and reductions run in a fixed order, "
    "so an identical config on an identical build reproduces every archive bit for bit"
)


# -- timing ---------------------------------------------------------------------------------


class PhaseTimer:
    def __init__(self):
        self.phases: dict[str, dict[str, float]] = {}

    @contextmanager
    def phase(self, name: str):
        w0, c0 = time.perf_counter(), time.process_time()
        try:
            yield
        finally:
            self.phases[name] = {"wall_s": time.perf_counter() - w0,
                                 "cpu_s": time.process_time() - c0}


# -- masks ----------------------------------------------------------------------------------


def dilate(mask: np.ndarray, grid: Grid, steps: int) -> np.ndarray:
    """Grow a node mask by ``steps`` lattice neighbours (26-connectivity)."""
    m = mask.reshape(grid.shape).copy()
    for _ in range(steps):
        # separable per-axis passes give the full 3x3x3 neighbourhood
        for axis in range(3):
            src = m.copy()
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis], hi[axis] = slice(0, -1), slice(1, None)
            m[tuple(hi)] |= src[tuple(lo)]
            m[tuple(lo)] |= src[tuple(hi)]
    return m.ravel()


def vessel_exclusion(cfg: ScenarioConfig, grid: Grid) -> np.ndarray:
    """Nodes inside a vessel or within one element spacing of its wall."""
    x = grid.node_coords
    h = float(np.max(grid.spacing))
    out = np.zeros(grid.n_nodes, dtype=bool)
    for v in cfg.vessel_specs():
        out |= distance_to_centerline(v, x) < v.radius + h
    return out


def region_masks(cfg: ScenarioConfig, grid: Grid, material: MaterialField) -> dict[str, np.ndarray]:
    """Node masks over which each zone's mean modulus is taken.

    Drops the boundary ring (stencil reach plus ``extra_margin``), the absorbing layer,
    a band of ``interface_margin`` nodes around zone interfaces, and the vessels.
    """
    inv = cfg.inversion
    keep = boundary_margin_mask(grid, StencilKind(inv.stencil).margin + inv.extra_margin)
    absorbing = cfg.absorbing_spec(material)
    if inv.exclude_absorbing and absorbing is not None:
        keep &= ~layer_nodes(grid, absorbing)
    zone = material.nodal_zone()
    keep &= ~dilate(zone < 0, grid, inv.interface_margin)
    keep &= ~vessel_exclusion(cfg, grid)
    return {name: keep & (zone == i) for i, name in enumerate(material.zone_names)}


def axis_profile(elastogram: Elastogram, axis: int, mask: np.ndarray | None = None) -> np.ndarray:
    """Mean G' over valid (and masked-in) nodes of every lattice plane normal to ``axis``."""
    g = elastogram.grid
    ok = elastogram.valid if mask is None else elastogram.valid & mask
    G = np.where(ok, elastogram.storage, 0.0).reshape(g.shape)
    cnt = ok.reshape(g.shape)
    other = tuple(a for a in range(3) if a != 2 - axis)
    s, c = G.sum(axis=other), cnt.sum(axis=other)
    return np.where(c > 0, s / np.maximum(c, 1), np.nan)


# -- closed loop ----------------------------------------------------------------------------


@dataclass
class Analysis:
    spectral: SpectralField
    elastogram: Elastogram
    regions: dict[str, RegionStats]
    profile_x: list[float | None]  # None where a plane has no valid voxel


def analyse(cfg: ScenarioConfig, grid: Grid, material: MaterialField,
            history: DisplacementHistory) -> Analysis:
    """Harmonic extraction, inversion and per-zone statistics for a recorded history."""
    inv = cfg.inversion
    spectral = extract_harmonic(history.samples, history.times, history.omega, grid)
    field_in = curl_filter(spectral) if inv.curl_filter else spectral
    lap, valid = laplacian(field_in, inv.stencil)
    elastogram = invert(field_in, lap, material.nodal_rho(), valid, inv.threshold, inv.stencil)
    regions = {}
    omega = history.omega
    for i, (name, mask) in enumerate(region_masks(cfg, grid, material).items()):
        regions[name] = region_stats(elastogram, mask, complex_modulus(material.zones[i], omega))
    interior = region_masks_union(cfg, grid, material)
    profile = axis_profile(elastogram, 0, interior)
    return Analysis(spectral, elastogram, regions,
                    [float(p) if np.isfinite(p) else None for p in profile])


def region_masks_union(cfg: ScenarioConfig, grid: Grid, material: MaterialField) -> np.ndarray:
    """Interior nodes used for line profiles: margins and layer dropped, interfaces kept."""
    inv = cfg.inversion
    keep = boundary_margin_mask(grid, StencilKind(inv.stencil).margin + inv.extra_margin)
    absorbing = cfg.absorbing_spec(material)
    if absorbing is not None:
        keep &= ~layer_nodes(grid, absorbing)
    return keep


def config_digest(cfg: ScenarioConfig) -> str:
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def design_defaults(cfg: ScenarioConfig, material: MaterialField) -> dict:
    absorbing = cfg.absorbing_spec(material)
    return {
        "element": "trilinear hexahedron, 2x2x2 Gauss quadrature, consistent mass",
        "constitutive": "Kelvin-Voigt shear only (lambda = 0), G' = mu, G'' = omega*eta",
        "dirichlet": f"penalty {cfg.excitation.penalty:g} / h on the consistent face mass",
        "drive_ramp_periods": cfg.excitation.ramp_periods,
        "absorbing_alpha": None if absorbing is None else absorbing.alpha,
        "absorbing_thickness": None if absorbing is None else absorbing.thickness,
        "harmonic": "c = (2/N) sum u(t_n) exp(-i w t_n) over the final recorded periods",
        "inversion_sign": "G* = -rho w^2 sum_j u_j conj(L_j) / sum_j |L_j|^2",
        "component_combination": "least squares over the three displacement components",
        "interface_handling": f"nodes within {cfg.inversion.interface_margin} of a zone "
                              "interface excluded from zone means",
        "vessel_handling": "surface point quadrature of the wall pressure; nodes closer than "
                           "radius + h to the centerline excluded from zone means",
        "steady_state": f"relative harmonic change between periods <= {cfg.time.steady_tol}",
    }


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    grid: Grid
    material: MaterialField
    history: DisplacementHistory
    analysis: Analysis
    report: dict
    manifest: dict
    output: Path | None = None

    @property
    def elastogram(self) -> Elastogram:
        return self.analysis.elastogram

    @property
    def regions(self) -> dict[str, RegionStats]:
        return self.analysis.regions


def build_report(cfg: ScenarioConfig, history: DisplacementHistory, analysis: Analysis) -> dict:
    fwd = {k: v for k, v in history.manifest.items() if k != "timings"}
    return {
        "scenario": cfg.name,
        "frequency_hz": cfg.excitation.frequency,
        "stencil": cfg.inversion.stencil,
        "nodes": list(cfg.grid.nodes),
        "steps_per_period": cfg.time.steps_per_period,
        "forward": fwd,
        "regions": {k: v.as_dict() for k, v in analysis.regions.items()},
        "profile_x_storage": analysis.profile_x,
    }


def format_report(report: dict) -> str:
    lines = [f"scenario {report['scenario']}: {report['nodes']} nodes, "
             f"{report['steps_per_period']} samples/period, {report['stencil']} stencil",
             f"{'zone':<12}{'n':>7}{'G_in':>11}{'G_rec':>11}{'dG%':>9}"
             f"{'Gpp_in':>10}{'Gpp_rec':>10}{'dGpp%':>9}"]
    for name, r in report["regions"].items():
        lines.append(f"{name:<12}{r['count']:>7}{r['storage_in']:>11.2f}{r['storage']:>11.2f}"
                     f"{r['signed_storage_pct']:>+9.2f}{r['loss_in']:>10.2f}{r['loss']:>10.2f}"
                     f"{r['signed_loss_pct']:>+9.2f}")
    return "\n".join(lines)


def _slice_index(grid: Grid, axis: int, cfg: ScenarioConfig) -> int:
    """Mid plane, nudged onto the first vessel's centerline when one crosses it."""
    n = grid.nodes_per_axis[axis]
    idx = (n - 1) // 2
    vessels = cfg.vessel_specs()
    if vessels:
        c = vessels[0].points.mean(axis=0)[axis]
        idx = int(round(c / grid.spacing[axis]))
    return min(max(idx, 0), n - 1)


def run_scenario(cfg: ScenarioConfig, output: str | Path | None = None,
                 write: bool = True, method: str | None = None) -> ScenarioResult:
    """Forward run, inversion and report; artifacts land in ``output`` (or ``cfg.output``).

    Files are staged in a sibling directory and moved into place only after every
    artifact is written, so a failed run leaves nothing behind.
    """
    timer = PhaseTimer()
    with timer.phase("setup"):
        grid = cfg.build_grid()
        material = cfg.build_material(grid)
        dirichlet = cfg.dirichlet()
        absorbing = cfg.absorbing_spec(material)
        vessels = cfg.vessel_specs()
        params = cfg.newmark()
    with timer.phase("forward"):
        history = simulate(grid, material, dirichlet, absorbing, vessels, params,
                           method or cfg.time.solver)
    with timer.phase("inversion"):
        analysis = analyse(cfg, grid, material, history)
    report = build_report(cfg, history, analysis)
    manifest = {
        "format": MANIFEST_FORMAT,
        "software_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config": cfg.model_dump(mode="json"),
        "config_sha256": config_digest(cfg),
        "determinism": DETERMINISM_NOTE,
        "design_defaults": design_defaults(cfg, material),
        "forward": {k: v for k, v in history.manifest.items() if k != "timings"},
        "timings": {**timer.phases, "forward_detail": history.manifest.get("timings", {})},
    }
    result = ScenarioResult(cfg, grid, material, history, analysis, report, manifest)
    if write:
        target = Path(output if output is not None else cfg.output)
        result.output = write_run(result, target, timer)
    return result


def write_run(result: ScenarioResult, target: Path, timer: PhaseTimer | None = None) -> Path:
    cfg = result.config
    target = Path(target)
    stage = target.parent / f".{target.name}.partial-{os.getpid()}"
    meta = {"scenario": cfg.name, "config_sha256": config_digest(cfg),
            "config": cfg.model_dump(mode="json")}
    try:
        if stage.exists():
            shutil.rmtree(stage)
        stage.mkdir(parents=True)
        export_fields(result.history, stage / "history", meta)
        export_fields(result.analysis.spectral, stage / "spectral", meta)
        export_fields(result.elastogram, stage / "elastogram", meta)
        axis = 1
        idx = _slice_index(result.grid, axis, cfg)
        export_slice(result.elastogram, axis, idx, stage / f"elastogram_y{idx}.csv")
        export_slice(result.analysis.spectral, axis, idx, stage / f"displacement_y{idx}.csv")
        (stage / "config.yaml").write_text(dump_config(cfg))
        (stage / "report.json").write_text(json.dumps(result.report, indent=2) + "\n")
        (stage / "report.txt").write_text(format_report(result.report) + "\n")
        if timer is not None:
            result.manifest["timings"].update(timer.phases)
        (stage / "manifest.json").write_text(json.dumps(result.manifest, indent=2) + "\n")
        if target.exists():
            shutil.rmtree(target)
        stage.rename(target)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return target


def invert_archive(path, stencil: str | None = None, cfg: ScenarioConfig | None = None,
                   rho: float = 1000.0) -> tuple[Elastogram, dict]:
    """Re-invert a stored displacement history, optionally with another stencil."""
    from .config import validate_config

    arc = read_archive(path)
    history = arc.to_history()
    if cfg is None and "config" in arc.metadata:
        cfg = validate_config(arc.metadata["config"], str(path))
    if cfg is not None:
        if stencil is not None:
            cfg = cfg.with_changes(inversion={"stencil": stencil})
        material = cfg.build_material(arc.grid)
        analysis = analyse(cfg, arc.grid, material, history)
        return analysis.elastogram, {k: v.as_dict() for k, v in analysis.regions.items()}
    kind = stencil or StencilKind.nested.value
    spectral = extract_harmonic(history.samples, history.times, history.omega, arc.grid)
    lap, valid = laplacian(spectral, kind)
    e = invert(spectral, lap, rho, valid, stencil=kind)
    return e, {}


# -- resolution sweeps ----------------------------------------------------------------------


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def estimate_memory(nodes: int, steps_per_period: int, record_periods: int = 1) -> float:
    """Rough peak bytes for one cell: four CSR operators, a factor or CG vectors, history."""
    n_nodes = nodes**3
    nnz = 81 * 3 * n_nodes
    matrices = 4 * nnz * 12
    factor = 20 * nnz * 8 if 3 * n_nodes < 20000 else 12 * 3 * n_nodes * 8
    history = steps_per_period * record_periods * 3 * n_nodes * 8 * 3
    return float(matrices + factor + history)


def available_memory() -> float:
    try:
        return float(os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE"))
    except (ValueError, OSError, AttributeError):  # pragma: no cover
        return math.inf


@dataclass
class CellResult:
    nodes: int
    steps_per_period: int
    status: str  # ok | skipped
    notice: str = ""
    regions: dict = field(default_factory=dict)
    inversion_cpu_s: float = math.nan
    forward_cpu_s: float = math.nan
    forward_wall_s: float = math.nan
    directory: str = ""

    @property
    def delta_storage(self) -> float:
        if not self.regions:
            return math.nan
        return max(r["delta_storage_pct"] for r in self.regions.values())

    @property
    def delta_loss(self) -> float:
        if not self.regions:
            return math.nan
        return max(r["delta_loss_pct"] for r in self.regions.values())


def _cell_config(cfg: ScenarioConfig, nodes: int, spp: int, periods: int) -> ScenarioConfig:
    return cfg.with_changes(
        grid={"nodes": (nodes, nodes, nodes)},
        time={"steps_per_period": spp, "n_periods": periods, "max_periods": periods},
    )


def _run_cell(cfg_data: dict, nodes: int, spp: int, periods: int, directory: str) -> dict:
    from .config import validate_config

    cfg = _cell_config(validate_config(cfg_data), nodes, spp, periods)
    grid = cfg.build_grid()
    material = cfg.build_material(grid)
    c0, w0 = time.process_time(), time.perf_counter()
    history = simulate(grid, material, cfg.dirichlet(), cfg.absorbing_spec(material),
                       cfg.vessel_specs(), cfg.newmark(), cfg.time.solver)
    fwd_cpu, fwd_wall = time.process_time() - c0, time.perf_counter() - w0
    c0 = time.process_time()
    analysis = analyse(cfg, grid, material, history)
    inv_cpu = time.process_time() - c0
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {"scenario": cfg.name, "config": cfg.model_dump(mode="json")}
    export_fields(history, d / "history", meta)
    export_fields(analysis.elastogram, d / "elastogram", meta)
    out = {
        "nodes": nodes, "steps_per_period": spp, "status": "ok",
        "regions": {k: v.as_dict() for k, v in analysis.regions.items()},
        "inversion_cpu_s": inv_cpu, "forward_cpu_s": fwd_cpu, "forward_wall_s": fwd_wall,
        "directory": str(d),
    }
    (d / "cell.json").write_text(json.dumps(out, indent=2) + "\n")
    return out


@dataclass
class SweepResult:
    nodes: list[int]
    tsamples: list[int]
    cells: dict[tuple[int, int], CellResult]
    spatial: dict[int, list[tuple[int, int, float]]]  # spp -> [(coarse, fine, diff)]
    temporal: dict[int, list[tuple[int, int, float]]]  # nodes -> [(coarse, fine, diff)]
    periods: int

    def delta_table(self, which: str = "storage") -> str:
        return _grid_table(self, lambda c: c.delta_storage if which == "storage" else c.delta_loss,
                           f"delta {which} (%)")

    def cpu_table(self) -> str:
        return _grid_table(self, lambda c: c.inversion_cpu_s, "inversion CPU (s)")

    def difference_tables(self) -> str:
        lines = ["spatial ladder: normalized ||u^N - u^(N-1)||"]
        for spp, rows in sorted(self.spatial.items()):
            for a, b, v in rows:
                lines.append(f"  spp={spp:<4d} {a:>4d} -> {b:<4d} {v:.6e}")
        lines.append("temporal ladder: normalized ||u^N - u^(N-1)||")
        for n, rows in sorted(self.temporal.items()):
            for a, b, v in rows:
                lines.append(f"  nodes={n:<4d} {a:>4d} -> {b:<4d} {v:.6e}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes, "tsamples": self.tsamples, "periods": self.periods,
            "cells": [vars(c) for _, c in sorted(self.cells.items())],
            "spatial": {str(k): v for k, v in self.spatial.items()},
            "temporal": {str(k): v for k, v in self.temporal.items()},
        }


def _grid_table(sweep: SweepResult, value, title: str) -> str:
    head = f"{title:<22}" + "".join(f"{s:>12d}" for s in sweep.tsamples)
    lines = [head]
    for n in sweep.nodes:
        row = f"{f'{n}^3':<22}"
        for s in sweep.tsamples:
            c = sweep.cells.get((n, s))
            if c is None:
                row += f"{'':>12}"
            elif c.status != "ok":
                row += f"{'skipped':>12}"
            else:
                row += f"{value(c):>12.4g}"
        lines.append(row)
    return "\n".join(lines)


def forward_difference(fine: DisplacementHistory, coarse: DisplacementHistory) -> float:
    """``||I u_fine - u_coarse|| / ||I u_fine||`` over all recorded samples.

    Fine histories are interpolated onto the coarse nodes (trilinear) and, for temporal
    ladders, subsampled onto the coarse sample times.
    """
    tf, tc = np.asarray(fine.times), np.asarray(coarse.times)
    if len(tf) % len(tc):
        raise ConfigError("temporal ladder entries must divide each other")
    step = len(tf) // len(tc)
    pick = np.arange(len(tc)) * step
    if not np.allclose(tf[pick], tc, rtol=1e-9, atol=1e-12):
        raise ConfigError("fine and coarse histories cover different time windows")
    num = den = 0.0
    same = fine.grid == coarse.grid
    pts = coarse.grid.node_coords
    for j, i in enumerate(pick):
        uf = fine.samples[i]
        if not same:
            uf = interpolate_points(NodalVectorField(fine.grid, uf), pts).ravel()
        uc = coarse.samples[j]
        num += float(np.sum((uf - uc) ** 2))
        den += float(np.sum(uf**2))
    return math.sqrt(num / den) if den > 0 else math.nan


def _load_history(cell: CellResult) -> DisplacementHistory:
    return read_archive(Path(cell.directory) / "history").to_history()


def sweep_cells(nodes, tsamples, mode: str = "cross",
                anchor: tuple[int, int] | None = None) -> list[tuple[int, int]]:
    """Cells to run: the full product, or the two ladders through ``anchor``."""
    if mode == "cross":
        return [(n, s) for n in nodes for s in tsamples]
    if mode != "axes":
        raise ConfigError(f"unknown sweep mode {mode!r}")
    an, at = anchor or (nodes[len(nodes) // 2], tsamples[-1])
    if an not in nodes or at not in tsamples:
        raise ConfigError("sweep anchor must lie on both ladders")
    cells = [(n, at) for n in nodes] + [(an, s) for s in tsamples if s != at]
    return sorted(set(cells))


def run_resolution_sweep(cfg: ScenarioConfig, nodes, tsamples, output: str | Path | None = None,
                         mode: str = "cross", anchor: tuple[int, int] | None = None,
                         periods: int | None = None, allow_large: bool = False,
                         workers: int | None = None) -> SweepResult:
    """Run every ladder cell with a fixed period count and tabulate convergence.

    Each cell runs in its own directory; aggregation happens here, in ladder order.
    """
    nodes, tsamples = [int(n) for n in nodes], [int(s) for s in tsamples]
    for name, ladder in (("node", nodes), ("samples-per-period", tsamples)):
        if not ladder:
            raise ConfigError(f"{name} ladder is empty")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError(f"{name} ladder must be strictly ascending")
    if min(tsamples) < 4:
        raise ConfigError("samples-per-period ladder entries must be >= 4")
    periods = periods or max(cfg.time.n_periods, cfg.time.max_periods)
    root = Path(output if output is not None else Path(cfg.output) / f"{cfg.name}-sweep")
    root.mkdir(parents=True, exist_ok=True)
    cfg_data = cfg.model_dump(mode="json")

    todo, cells = [], {}
    budget = available_memory()
    for n, s in sweep_cells(nodes, tsamples, mode, anchor):
        if n > DESK_NODE_CAP and not allow_large:
            cells[(n, s)] = CellResult(n, s, "skipped",
                                       f"{n}^3 exceeds the desk cap of {DESK_NODE_CAP}^3")
        elif estimate_memory(n, s, cfg.time.record_periods) > budget:
            cells[(n, s)] = CellResult(n, s, "skipped", "insufficient memory for this cell")
        else:
            todo.append((n, s))
    for c in cells.values():
        log.warning("sweep cell %d^3 x %d skipped: %s", c.nodes, c.steps_per_period, c.notice)

    workers = workers or worker_count()
    jobs = [(cfg_data, n, s, periods, str(root / f"n{n:03d}_s{s:03d}")) for n, s in todo]
    if workers <= 1 or len(jobs) <= 1:
        outs = [_run_cell(*j) for j in jobs]
    else:
        with cf.ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outs = list(pool.map(_run_cell, *zip(*jobs)))
    for o in outs:
        cells[(o["nodes"], o["steps_per_period"])] = CellResult(**o)

    spatial: dict[int, list] = {}
    temporal: dict[int, list] = {}
    ok = {k for k, c in cells.items() if c.status == "ok"}
    for s in tsamples:
        rungs = [n for n in nodes if (n, s) in ok]
        rows = []
        for a, b in zip(rungs, rungs[1:]):
            rows.append((a, b, forward_difference(_load_history(cells[(b, s)]),
                                                  _load_history(cells[(a, s)]))))
        if rows:
            spatial[s] = rows
    for n in nodes:
        rungs = [s for s in tsamples if (n, s) in ok]
        rows = []
        for a, b in zip(rungs, rungs[1:]):
            rows.append((a, b, forward_difference(_load_history(cells[(n, b)]),
                                                  _load_history(cells[(n, a)]))))
        if rows:
            temporal[n] = rows
    result = SweepResult(nodes, tsamples, cells, spatial, temporal, periods)
    (root / "sweep.json").write_text(json.dumps(result.as_dict(), indent=2) + "\n")
    (root / "tables.txt").write_text("\n\n".join([
        result.difference_tables(), result.delta_table("storage"), result.delta_table("loss"),
        result.cpu_table()]) + "\n")
    return result
