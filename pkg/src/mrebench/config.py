"""Scenario files: strict YAML schema with line-numbered diagnostics."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .assembly import AbsorbingSpec, DirichletSpec
from .grid import FACES, Grid, build_grid
from .integrator import NewmarkParams
from .material import KelvinVoigt, MaterialField, ZoneSpec, uniform_material, zoned_material
from .vessel import VesselError, VesselSpec


class ConfigError(ValueError):
    """Invalid scenario; ``str()`` carries file and line information where known."""


Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridCfg(_Strict):
    extent: Vec3 = (0.1, 0.1, 0.1)
    nodes: tuple[int, int, int] = (25, 25, 25)


class MaterialCfg(_Strict):
    mu: float = Field(2500.0, gt=0)
    eta: float = Field(1.0, ge=0)
    rho: float = Field(1000.0, gt=0)

    def build(self) -> KelvinVoigt:
        return KelvinVoigt(self.mu, self.eta, self.rho)


class ZoneCfg(MaterialCfg):
    name: str
    lower: Vec3
    upper: Vec3


class MaterialSection(_Strict):
    uniform: Optional[MaterialCfg] = None
    zones: Optional[list[ZoneCfg]] = None

    @model_validator(mode="after")
    def _one_kind(self):
        if (self.uniform is None) == (self.zones is None):
            raise ValueError("give exactly one of 'uniform' or 'zones'")
        if self.zones is not None:
            names = [z.name for z in self.zones]
            if len(set(names)) != len(names):
                raise ValueError("zone names must be unique")
        return self


class ExcitationCfg(_Strict):
    face: Literal[FACES] = "x0"  # type: ignore[valid-type]
    amplitude: Vec3 = (0.0, 0.0, 1e-4)
    frequency: float = Field(50.0, gt=0)
    penalty: float = Field(1e7, gt=0)
    ramp_periods: float = Field(2.0, ge=0)


class AbsorbingCfg(_Strict):
    thickness: float = Field(0.01, gt=0)
    alpha: Union[float, Literal["auto"]] = 0.05
    faces: tuple[Literal[FACES], ...] = ("x1", "y0", "y1", "z0", "z1")  # type: ignore[valid-type]

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, v):
        if v != "auto" and v < 0:
            raise ValueError("alpha must be >= 0 or 'auto'")
        return v


class VesselCfg(_Strict):
    name: str = ""
    centerline: list[Vec3]
    radius: float = Field(0.005, gt=0)
    p_mean: float = Field(12500.0, ge=0)
    p_amp: float = Field(2000.0, ge=0)
    f_pulse: float = Field(1.0, ge=0)
    phase: float = 0.0
    frozen_phase: Optional[float] = None
    n_axial: int = Field(2, ge=1)
    n_circumferential: int = Field(16, ge=3)

    def build(self) -> VesselSpec:
        return VesselSpec(
            tuple(tuple(p) for p in self.centerline), self.radius, self.p_mean, self.p_amp,
            self.f_pulse, self.phase, self.frozen_phase, self.n_axial, self.n_circumferential,
        )


class TimeCfg(_Strict):
    steps_per_period: int = Field(32, ge=4)
    n_periods: int = Field(6, ge=1)
    max_periods: int = Field(12, ge=1)
    record_periods: int = Field(1, ge=1)
    steady_tol: float = Field(0.01, gt=0)
    beta: float = 0.25
    gamma: float = 0.5
    solver: Literal["auto", "direct", "cg"] = "auto"


class InversionCfg(_Strict):
    stencil: Literal["standard", "nested"] = "nested"
    extra_margin: int = Field(2, ge=0)
    interface_margin: int = Field(1, ge=0)
    curl_filter: bool = False
    exclude_absorbing: bool = True
    threshold: float = Field(1e-12, ge=0)


class ScenarioConfig(_Strict):
    name: str = "scenario"
    grid: GridCfg = GridCfg()
    material: MaterialSection = MaterialSection(uniform=MaterialCfg())
    excitation: ExcitationCfg = ExcitationCfg()
    absorbing: Optional[AbsorbingCfg] = AbsorbingCfg()
    vessels: list[VesselCfg] = []
    time: TimeCfg = TimeCfg()
    inversion: InversionCfg = InversionCfg()
    output: str = "out"

    # -- builders -------------------------------------------------------------------------
    def build_grid(self) -> Grid:
        return build_grid(self.grid.extent, self.grid.nodes)

    def build_material(self, grid: Grid | None = None) -> MaterialField:
        grid = grid or self.build_grid()
        if self.material.uniform is not None:
            return uniform_material(grid, self.material.uniform.build())
        zones = [ZoneSpec(z.lower, z.upper, z.build(), z.name) for z in self.material.zones]
        return zoned_material(grid, zones)

    def dirichlet(self) -> DirichletSpec:
        e = self.excitation
        return DirichletSpec(e.face, e.amplitude, 2 * math.pi * e.frequency, e.penalty,
                             e.ramp_periods)

    def absorbing_spec(self, material: MaterialField | None = None) -> AbsorbingSpec | None:
        a = self.absorbing
        if a is None:
            return None
        alpha = a.alpha
        if alpha == "auto":
            from .reflection import optimal_layer_alpha

            m = self.reference_material(material)
            alpha = optimal_layer_alpha(m, 2 * math.pi * self.excitation.frequency, a.thickness)
        return AbsorbingSpec(a.thickness, float(alpha), tuple(a.faces))

    def reference_material(self, material: MaterialField | None = None) -> KelvinVoigt:
        if self.material.uniform is not None:
            return self.material.uniform.build()
        return self.material.zones[0].build()

    def vessel_specs(self) -> list[VesselSpec]:
        return [v.build() for v in self.vessels]

    def newmark(self) -> NewmarkParams:
        t = self.time
        return NewmarkParams(self.excitation.frequency, t.steps_per_period, t.n_periods,
                             t.record_periods, max(t.max_periods, t.n_periods), t.steady_tol,
                             t.beta, t.gamma)

    def with_changes(self, **sections) -> "ScenarioConfig":
        """Copy with whole sections or nested keys replaced, e.g. ``grid={'nodes': ...}``."""
        data = self.model_dump()
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key].update(value)
            else:
                data[key] = value
        return validate_config(data)


# -- loading --------------------------------------------------------------------------------


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that remembers the source line of every mapping key."""


def _construct_mapping(loader, node, deep=False):
    mapping = {}
    lines = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in mapping:
            raise ConfigError(f"line {key_node.start_mark.line + 1}: duplicate key {key!r}")
        mapping[key] = loader.construct_object(value_node, deep=True)
        lines[key] = key_node.start_mark.line + 1
    return _LinedDict(mapping, lines)


class _LinedDict(dict):
    def __init__(self, data, lines):
        super().__init__(data)
        self.lines = lines


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _line_of(data, loc) -> int | None:
    line = None
    node = data
    for part in loc:
        if isinstance(node, _LinedDict) and part in node:
            line = node.lines.get(part, line)
            node = node[part]
        elif isinstance(node, list) and isinstance(part, int) and part < len(node):
            node = node[part]
        elif isinstance(node, _LinedDict) and isinstance(part, str):
            # unknown key: pydantic reports it under its own name
            line = node.lines.get(part, line)
            break
        else:
            break
    return line


def _format_errors(exc: ValidationError, data, source: str) -> str:
    out = []
    for err in exc.errors():
        loc = [p for p in err["loc"] if not (isinstance(p, str) and p.startswith("function-"))]
        line = _line_of(data, loc)
        where = f"{source}:{line}" if line else source
        path = ".".join(str(p) for p in loc) or "<root>"
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        out.append(f"{where}: {path}: {msg}")
    return "\n".join(out)


def validate_config(data, source: str = "<config>") -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, data, source)) from None
    try:
        check_geometry(cfg)
    except (ValueError, VesselError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def check_geometry(cfg: ScenarioConfig):
    """Cross-field checks that need the grid: zones tile, vessels fit, layer thickness."""
    grid = cfg.build_grid()
    cfg.build_material(grid)
    if cfg.absorbing is not None:
        if cfg.absorbing.thickness >= 0.5 * min(grid.extent):
            raise ConfigError("absorbing.thickness must be below half the smallest extent")
    for i, v in enumerate(cfg.vessels):
        try:
            v.build().validate(grid)
        except VesselError as exc:
            raise ConfigError(f"vessels.{i}: {exc}") from None
    t = cfg.time
    if t.record_periods > t.n_periods:
        raise ConfigError("time.record_periods must not exceed time.n_periods")
    if not 0 < t.beta <= 0.5 or not 0.5 <= t.gamma <= 1:
        raise ConfigError("time.beta must lie in (0, 1/2] and time.gamma in [1/2, 1]")
    if cfg.excitation.face in (cfg.absorbing.faces if cfg.absorbing else ()):
        raise ConfigError("the excited face cannot also carry the absorbing layer")


def load_config_text(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    if data is not None and data.get("format") == "mrebench-manifest":
        # a run manifest embeds the full resolved config
        data = data.get("config")
    return validate_config(data, source)


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return load_config_text(text, str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(_plain(cfg.model_dump(mode="json")), sort_keys=False)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
