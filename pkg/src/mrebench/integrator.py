"""Newmark-beta time stepping of ``M a + C v + K d = f(t)`` and the forward simulation."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AbsorbingSpec, DirichletSpec, build_system
from .grid import Grid
from .material import MaterialField
from .vessel import VesselSpec, discretize_vessel, pressure, unit_load

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class NewmarkParams:
    frequency: float = 50.0  # drive frequency, Hz
    steps_per_period: int = 32
    n_periods: int = 6
    record_periods: int = 1
    max_periods: int = 6  # extra periods allowed while the steady-state gate is open
    steady_tol: float = 0.01
    beta: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        if not 0 < self.beta <= 0.5:
            raise ValueError(f"beta must lie in (0, 1/2], got {self.beta}")
        if not 0.5 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [1/2, 1], got {self.gamma}")
        if self.frequency <= 0:
            raise ValueError("frequency must be > 0")
        if self.steps_per_period < 1 or self.n_periods < 1:
            raise ValueError("steps_per_period and n_periods must be >= 1")
        if not 1 <= self.record_periods <= self.n_periods:
            raise ValueError("record_periods must lie in [1, n_periods]")
        if self.max_periods < self.n_periods:
            raise ValueError("max_periods must be >= n_periods")

    @property
    def dt(self) -> float:
        return 1.0 / (self.frequency * self.steps_per_period)

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency


@dataclass
class State:
    d: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0


class EffectiveOperator:
    """Solver for ``[M + gamma dt C + beta dt^2 K] x = b``, set up once.

    ``method='direct'`` factorises with SuperLU; ``'cg'`` runs Jacobi-preconditioned
    conjugate gradients warm-started from the caller's guess.  ``'auto'`` picks the
    factorisation below ``direct_limit`` unknowns.
    """

    def __init__(self, A: sp.spmatrix, method: str = "auto", rtol: float = 1e-10,
                 direct_limit: int = 20000):
        self.A = sp.csr_matrix(A)
        self.rtol = rtol
        n = self.A.shape[0]
        if method == "auto":
            method = "direct" if n <= direct_limit else "cg"
        if method not in ("direct", "cg"):
            raise ValueError(f"unknown solver method {method!r}")
        self.method = method
        self.iterations = 0
        self.solves = 0
        if method == "direct":
            try:
                self._lu = spla.splu(self.A.tocsc())
            except RuntimeError as exc:
                raise NumericalError(f"singular effective operator: {exc}") from exc
        else:
            diag = self.A.diagonal()
            if np.any(diag <= 0):
                raise NumericalError("effective operator has a non-positive diagonal")
            self._inv_diag = 1.0 / diag
            self._precond = spla.LinearOperator(
                self.A.shape, matvec=lambda x: self._inv_diag * x, dtype=float
            )

    def solve(self, b: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        self.solves += 1
        if self.method == "direct":
            x = self._lu.solve(b)
            if not np.all(np.isfinite(x)):
                raise NumericalError("singular effective operator")
            return x
        if not np.any(b):
            return np.zeros_like(b)
        count = 0

        def _count(_):
            nonlocal count
            count += 1

        x, info = spla.cg(self.A, b, x0=x0, rtol=self.rtol, M=self._precond,
                          maxiter=10 * self.A.shape[0], callback=_count)
        self.iterations += count
        if info != 0:
            raise NumericalError(f"conjugate gradients did not converge (info={info})")
        return x


def effective_operator(M, C, K, params: NewmarkParams, dt: float | None = None,
                       method: str = "auto") -> EffectiveOperator:
    dt = params.dt if dt is None else dt
    A = M + (params.gamma * dt) * C + (params.beta * dt * dt) * K
    return EffectiveOperator(A, method=method)


def initial_state(M, C, K, f0: np.ndarray, d0=None, v0=None, method: str = "auto") -> State:
    """State at t = 0 with the acceleration consistent with the equation of motion."""
    n = M.shape[0]
    d = np.zeros(n) if d0 is None else np.asarray(d0, float).copy()
    v = np.zeros(n) if v0 is None else np.asarray(v0, float).copy()
    rhs = f0 - C @ v - K @ d
    a = EffectiveOperator(M, method=method).solve(rhs) if np.any(rhs) else np.zeros(n)
    return State(d, v, a, 0.0)


def newmark_step(state: State, op: EffectiveOperator, M, C, K, f_next: np.ndarray,
                 params: NewmarkParams, dt: float | None = None) -> State:
    """One predictor / solve / corrector step (average acceleration for the defaults)."""
    dt = params.dt if dt is None else dt
    beta, gamma = params.beta, params.gamma
    d_pred = state.d + dt * state.v + (0.5 - beta) * dt * dt * state.a
    v_pred = state.v + (1.0 - gamma) * dt * state.a
    rhs = f_next - K @ d_pred - C @ v_pred
    a = op.solve(rhs, x0=state.a)
    return State(d_pred + beta * dt * dt * a, v_pred + gamma * dt * a, a, state.t + dt)


@dataclass
class DisplacementHistory:
    grid: Grid
    times: np.ndarray  # (n_samples,)
    samples: np.ndarray = field(repr=False)  # (n_samples, n_dofs)
    frequency: float = 50.0
    manifest: dict = field(default_factory=dict)

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def simulate(grid: Grid, material: MaterialField, dirichlet: DirichletSpec,
             absorbing: AbsorbingSpec | None, vessels: list[VesselSpec] | tuple = (),
             params: NewmarkParams = NewmarkParams(), method: str = "auto",
             progress: Callable[[int, int], None] | None = None) -> DisplacementHistory:
    """Run the drive from rest and record the final ``record_periods`` periods.

    After ``n_periods`` the run keeps going (up to ``max_periods``) while the drive
    harmonic still changes by more than ``steady_tol`` between consecutive periods.
    """
    if not math.isclose(dirichlet.omega, params.omega, rel_tol=1e-12):
        raise ValueError("Dirichlet drive frequency and Newmark frequency disagree")
    timings = {}
    t0 = time.perf_counter()
    system = build_system(grid, material, dirichlet, absorbing)
    M, C, K = system.M, system.C, system.K
    vessel_units = []
    for v in vessels:
        quad = discretize_vessel(grid, v)
        vessel_units.append((v, unit_load(grid, quad)))
    timings["assembly_s"] = time.perf_counter() - t0

    def force(t: float) -> np.ndarray:
        f = dirichlet.signal(t) * system.f_pen_unit
        for v, unit in vessel_units:
            f = f + pressure(v, t) * unit
        return f

    t0 = time.perf_counter()
    op = effective_operator(M, C, K, params, method=method)
    state = initial_state(M, C, K, force(0.0), method=method)
    timings["setup_s"] = time.perf_counter() - t0

    n = params.steps_per_period
    dt = params.dt
    amp_scale = max(float(np.max(np.abs(dirichlet.amplitude))), 1e-12)
    phase = np.exp(-1j * params.omega * dt * np.arange(n))
    harmonics: list[np.ndarray] = []
    window: list[np.ndarray] = []
    steady_change = float("nan")
    period = 0
    step = 0
    t0 = time.perf_counter()
    while True:
        # state is at t = period * T; sample n states of this period
        acc = np.zeros(grid.n_dofs, dtype=complex)
        period_samples = []
        for k in range(n):
            acc += phase[k] * state.d
            period_samples.append(state.d)
            t_next = (period * n + k + 1) * dt
            state = newmark_step(state, op, M, C, K, force(t_next), params, dt)
            step += 1
            if not np.all(np.isfinite(state.d)) or np.max(np.abs(state.d)) > 1e6 * amp_scale:
                raise NumericalError(f"displacement blew up at t = {state.t:.6g} s")
            if progress is not None:
                progress(step, params.n_periods * n)
        harmonics.append((2.0 / n) * acc)
        window.append(np.array(period_samples))
        if len(window) > params.record_periods:
            window.pop(0)
        period += 1
        if len(harmonics) >= 2:
            last, prev = harmonics[-1], harmonics[-2]
            steady_change = float(np.linalg.norm(last - prev) / max(np.linalg.norm(last), 1e-300))
            harmonics = harmonics[-2:]
        if period >= params.n_periods:
            if steady_change <= params.steady_tol or period >= params.max_periods:
                break
    timings["time_loop_s"] = time.perf_counter() - t0

    samples = np.concatenate(window, axis=0)
    first = (period - params.record_periods) * n
    times = (first + np.arange(len(samples))) * dt
    manifest = {
        "periods_run": period,
        "steady_state_change": steady_change,
        "steady": bool(steady_change <= params.steady_tol),
        "solver": op.method,
        "cg_iterations": op.iterations,
        "timings": timings,
    }
    log.info("forward run: %d periods, steady change %.3g, solver %s",
             period, steady_change, op.method)
    return DisplacementHistory(grid, times, samples, params.frequency, manifest)
