"""Radial finite-volume solver for ``u_t = Lu + |u|^(q-1) u`` with blow-up detection.

The diffusion term is discretised conservatively on the dual cells of a
:class:`~fujita_lab.grid.RadialGrid`: face fluxes ``r^(n-1) a(r) u_r`` at
half nodes, divided by the exact shell volume of each cell.  The axis cell has
no inner face, which is the reflection condition ``u_r(0) = 0``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import CoefficientField
from .errors import ConfigurationError, DomainError, SolverAbort
from .exact import ExactSolutionParams, admissible_params, critical_exponent, eval_u
from .grid import GridFunction, RadialGrid

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "neumann")
INTEGRATORS = ("rk2", "imex")
DT_UNDERFLOW = 1e-14


@dataclass(frozen=True)
class InitialData:
    """Initial profile: ``gaussian`` (amplitude * exp(-r^2/width^2)), ``exact``
    (amplitude * u(0, r) for ``params``) or ``constant`` (amplitude)."""

    kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    params: Optional[ExactSolutionParams] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "exact", "constant"):
            raise ConfigurationError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "exact" and self.params is None:
            raise ConfigurationError("exact initial data needs params")
        if self.kind == "gaussian" and not self.width > 0:
            raise ConfigurationError("gaussian width must be positive")

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-((r / self.width) ** 2))
        if self.kind == "exact":
            return self.amplitude * eval_u(self.params, 0.0, r)
        return np.full(r.shape, float(self.amplitude))


@dataclass(frozen=True)
class SolverConfig:
    field: CoefficientField
    q: float
    r_max: float = 50.0
    nodes: int = 401
    stretch: float = 1.0
    t_end: float = 10.0
    init: InitialData = InitialData()
    bc: str = "dirichlet"
    integrator: str = "rk2"
    cfl: float = 0.4
    dt_max: float = 0.1
    react_fraction: float = 0.02
    threshold: float = 1e8
    decay: float = 1e-12
    reaction: bool = True
    frames: int = 101

    def __post_init__(self):
        if not self.r_max > 0 or not self.t_end > 0:
            raise ConfigurationError("r_max and t_end must be positive")
        if not 0 < self.cfl < 1:
            raise ConfigurationError("cfl must lie in (0, 1)")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigurationError(f"bc must be one of {BOUNDARY_CONDITIONS}")
        if self.integrator not in INTEGRATORS:
            raise ConfigurationError(f"integrator must be one of {INTEGRATORS}")
        if self.nodes < 3:
            raise ConfigurationError("need at least 3 radial nodes")
        if self.stretch < 1:
            raise ConfigurationError("stretch ratio must be >= 1")
        if self.frames < 2:
            raise ConfigurationError("need at least 2 stored frames")

    def make_grid(self) -> RadialGrid:
        if self.stretch == 1.0:
            return RadialGrid.uniform(self.field.n, self.r_max, self.nodes)
        # nodes gives the count a uniform grid would have; h0 keeps the same inner spacing
        return RadialGrid.geometric(self.field.n, self.r_max, self.r_max / (self.nodes - 1) / 4,
                                    self.stretch)

    def canonical(self) -> str:
        """Deterministic ``key=value`` rendering used for hashing."""
        items = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "field":
                for k in ("kind", "n", "alpha", "c_growth", "value", "table_r", "table_a", "table_t"):
                    items.append((f"field.{k}", repr(getattr(v, k))))
            elif f.name == "init":
                for k in ("kind", "amplitude", "width", "params"):
                    items.append((f"init.{k}", repr(getattr(v, k))))
            else:
                items.append((f.name, repr(v)))
        return "\n".join(f"{k}={v}" for k, v in sorted(items))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass
class RunResult:
    """Outcome of one run.

    ``outcome`` is ``"BlowUp"``, ``"GlobalUpToHorizon"`` or ``"Decayed"``.
    ``t_star`` is the blow-up estimate (BlowUp) or the time the max-norm fell
    below the decay level (Decayed).
    """

    outcome: str
    t_star: Optional[float]
    final_max: float
    t_final: float
    history_t: np.ndarray
    history_max: np.ndarray
    frames: GridFunction
    steps: int
    dt_min: float
    config_hash: str
    fit_quality: Optional[float] = None
    warning: Optional[str] = None

    @property
    def blew_up(self) -> bool:
        return self.outcome == "BlowUp"


class RadialOperator:
    """Discrete ``r^(1-n) d/dr (r^(n-1) a d/dr)`` on a radial grid."""

    def __init__(self, grid: RadialGrid, field: CoefficientField, bc: str = "dirichlet"):
        if field.n != grid.n:
            raise ConfigurationError("field and grid dimensions differ")
        lo, hi = field.radial_range()
        if grid.r_max > hi:
            raise ConfigurationError(f"grid extends to {grid.r_max}, field is tabulated up to {hi}")
        self.grid = grid
        self.field = field
        self.bc = bc
        r = grid.r
        n = grid.n
        self.r_half = 0.5 * (r[1:] + r[:-1])
        edges = np.concatenate([[0.0], self.r_half, [r[-1]]])
        self.vol = (edges[1:] ** n - edges[:-1] ** n) / n
        self._geom = self.r_half ** (n - 1) / np.diff(r)
        self._t_cached = None
        self.set_time(0.0)

    def set_time(self, t: float) -> None:
        if self._t_cached is not None and not self.field.time_dependent:
            return
        self.cond = self._geom * self.field.scalar(t, self.r_half)
        self._t_cached = t

    def apply(self, u: np.ndarray) -> np.ndarray:
        flux = self.cond * np.diff(u)
        out = np.empty_like(u)
        out[0] = flux[0]
        out[1:-1] = flux[1:] - flux[:-1]
        out[-1] = -flux[-1]
        out /= self.vol
        if self.bc == "dirichlet":
            out[-1] = 0.0
        return out

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.grid.r.size)
        d[:-1] += self.cond
        d[1:] += self.cond
        return d / self.vol

    def stable_dt(self) -> float:
        """Largest step with ``dt * diag <= 1`` in every cell (sufficient for Euler and Heun)."""
        d = self.diagonal()
        if self.bc == "dirichlet":
            d = d[:-1]
        dmax = float(d.max())
        return math.inf if dmax == 0 else 1.0 / dmax

    def banded(self, theta_dt: float) -> np.ndarray:
        """``I - theta_dt * L`` in ``solve_banded`` layout."""
        N = self.grid.r.size
        ab = np.zeros((3, N))
        ab[1] = 1.0 + theta_dt * self.diagonal()
        ab[0, 1:] = -theta_dt * self.cond / self.vol[:-1]
        ab[2, :-1] = -theta_dt * self.cond / self.vol[1:]
        if self.bc == "dirichlet":
            ab[1, -1] = 1.0
            ab[2, -2] = 0.0
        return ab


def source(u: np.ndarray, q: float) -> np.ndarray:
    """``|u|^(q-1) u``, with the value 0 at ``u = 0`` for every ``q``."""
    au = np.abs(u)
    return np.sign(u) * au**q


def rhs(u: np.ndarray, field: CoefficientField, q: float, grid: RadialGrid,
        bc: str = "dirichlet", t: float = 0.0, reaction: bool = True,
        operator: Optional[RadialOperator] = None) -> np.ndarray:
    """Semi-discrete time derivative of a radial state."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        bad = int(np.flatnonzero(~np.isfinite(u))[0])
        raise SolverAbort(f"non-finite state at node {bad} (r={grid.r[bad]:.6g}, t={t:.6g})")
    op = operator if operator is not None else RadialOperator(grid, field, bc)
    op.set_time(t)
    du = op.apply(u)
    if reaction:
        du += source(u, q)
    if bc == "dirichlet":
        du[-1] = 0.0
    return du


def effective_threshold(config: "SolverConfig") -> float:
    """Blow-up level actually used: the configured threshold, capped where the
    reaction-limited step would fall to 1000x the underflow floor.

    Past that level the remaining time to blow-up is below the resolution of a
    double near ``t*`` (for ``q = 3`` and ``t* = 0.5`` this happens near ``max = 1e7``).
    """
    q = config.q
    if q <= 1 or not config.reaction:
        return config.threshold
    cap = (config.react_fraction / (1e3 * DT_UNDERFLOW)) ** (1.0 / (q - 1.0))
    return min(config.threshold, cap)


def _fit_blowup_time(tau: np.ndarray, m: np.ndarray, q: float):
    """Extrapolate ``m^(1-q)`` linearly in time to zero.

    ``tau`` is time measured from the start of the fit window.  Returns
    ``(tau_star, r_squared)`` or ``None`` when the window is not a clean
    monotone blow-up.
    """
    if q <= 1 or tau.size < 3 or np.any(np.diff(m) <= 0):
        return None
    y = m ** (1.0 - q)
    slope, icpt = np.polyfit(tau, y, 1)
    if not slope < 0:
        return None
    pred = slope * tau + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return -icpt / slope, r2


def run(config: SolverConfig) -> RunResult:
    """Integrate until ``t_end``, blow-up (max >= threshold) or decay."""
    grid = config.make_grid()
    op = RadialOperator(grid, config.field, config.bc)
    q = config.q
    u = config.init.evaluate(grid.r).astype(float)
    if config.bc == "dirichlet":
        u[-1] = 0.0
    if not np.max(np.abs(u)) < config.threshold:
        raise ConfigurationError("blow-up threshold must exceed the initial max")
    level = effective_threshold(config)
    # fit window starts at sqrt(level); its clock is kept separately so that
    # tiny steps near t* are not lost to rounding in t
    window_start = math.sqrt(level) if level > 1 else level
    anchor, tau, win_m = None, [], []
    implicit = config.integrator == "imex"
    dt_diff = math.inf if implicit else config.cfl * op.stable_dt()

    frame_times = np.linspace(0.0, config.t_end, config.frames)
    frames_t, frames_u = [0.0], [u.copy()]
    next_frame = 1
    hist_t, hist_m = [0.0], [float(np.max(np.abs(u)))]
    t, steps, dt_min = 0.0, 0, math.inf
    outcome, t_star, quality, warn = "GlobalUpToHorizon", None, None, None

    def f(v, tv):
        return rhs(v, config.field, q, grid, config.bc, tv, config.reaction, op)

    while t < config.t_end:
        m = hist_m[-1]
        dt = min(dt_diff, config.dt_max)
        if config.reaction and q > 1 and m > 0:
            dt = min(dt, config.react_fraction * m ** (1.0 - q))
        # land exactly on the next frame time (t_end is the last frame)
        target = frame_times[next_frame] if next_frame < frame_times.size else config.t_end
        landing = target - t <= dt
        if landing:
            dt = target - t
        if dt < DT_UNDERFLOW and not landing:
            warn = f"dt underflow at t={t:.17g} without reaching the threshold; inconclusive"
            warnings.warn(warn)
            break
        if implicit:
            u = _imex_step(u, t, dt, op, q, config.reaction, config.bc)
        else:
            k1 = f(u, t)
            u1 = u + dt * k1
            u = 0.5 * (u + u1 + dt * f(u1, t + dt))
        if not np.all(np.isfinite(u)):
            raise SolverAbort(f"non-finite state after step {steps + 1} at t={t + dt:.6g}")
        t = target if landing else t + dt
        steps += 1
        dt_min = min(dt_min, dt)
        m = float(np.max(np.abs(u)))
        hist_t.append(t)
        hist_m.append(m)
        if anchor is None and m >= window_start:
            anchor, tau, win_m = (t, 0.0), [0.0], [m]
        elif anchor is not None:
            tau.append(tau[-1] + dt)
            win_m.append(m)
        if landing and next_frame < frame_times.size:
            frames_t.append(t)
            frames_u.append(u.copy())
            next_frame += 1
        if m >= level:
            fit = None
            if anchor is not None and len(tau) >= 8:
                fit = _fit_blowup_time(np.array(tau), np.array(win_m), q)
            if fit is None:
                warn = f"threshold crossed at t={t:.17g} but extrapolation failed"
            else:
                outcome, quality = "BlowUp", fit[1]
                t_star = min(max(anchor[0] + fit[0], t), config.t_end)
            break
        if m < config.decay:
            outcome, t_star = "Decayed", t
            break

    if frames_t[-1] < t:
        frames_t.append(t)
        frames_u.append(u.copy())
    frames = GridFunction(grid, np.array(frames_t), np.array(frames_u))
    return RunResult(outcome, t_star, hist_m[-1], t, np.array(hist_t), np.array(hist_m), frames,
                     steps, dt_min, config.config_hash(), quality, warn)


def _imex_step(u, t, dt, op: RadialOperator, q, reaction, bc):
    """Crank-Nicolson diffusion with a Heun predictor-corrector for the source."""
    op.set_time(t + 0.5 * dt)
    ab = op.banded(0.5 * dt)
    explicit = u + 0.5 * dt * op.apply(u)
    s0 = source(u, q) if reaction else 0.0
    pred = solve_banded((1, 1), ab, _pin(explicit + dt * s0, bc))
    if not reaction:
        return pred
    s1 = source(pred, q)
    return solve_banded((1, 1), ab, _pin(explicit + 0.5 * dt * (s0 + s1), bc))


def _pin(b, bc):
    if bc == "dirichlet":
        b = b.copy()
        b[-1] = 0.0
    return b


def ode_blowup_time(u0: float, q: float) -> float:
    """Blow-up time of ``u' = u^q`` from ``u0 > 0``."""
    return u0 ** (1.0 - q) / (q - 1.0)


def sandwich_tolerance(grid: RadialGrid) -> float:
    return 1e-6 + 1e-3 * float(np.max(grid.h)) ** 2


def sandwich_check(result: RunResult, p: ExactSolutionParams) -> bool:
    """True iff every stored frame lies below the exact supersolution (plus tolerance).

    Raises :class:`DomainError` when the initial frame is not dominated.
    """
    fr = result.frames
    tol = sandwich_tolerance(fr.grid)
    if np.any(fr.values[0] > eval_u(p, 0.0, fr.grid.r) + tol):
        raise DomainError("initial data is not below the supersolution")
    T, R = fr.mesh
    return bool(np.all(fr.values <= eval_u(p, T, R) + tol))


def dominating_supersolution(field: CoefficientField, q: float, init: InitialData,
                             grid: RadialGrid, shifts=None) -> Optional[ExactSolutionParams]:
    """Smallest time shift of the extremal exact solution lying above the initial data.

    Only defined for the power family with ``q`` supercritical; returns ``None``
    if no shift in ``shifts`` works.
    """
    if field.kind != "power" or field.alpha <= 0:
        return None
    box = admissible_params(field.n, field.alpha, q)
    if box is None:
        return None
    base = box.params()
    u0 = init.evaluate(grid.r)
    shifts = np.concatenate([[0.0], np.geomspace(1e-2, 1e5, 141)]) if shifts is None else shifts
    for s in shifts:
        p = dataclasses.replace(base, t_shift=float(s))
        if np.all(u0 <= eval_u(p, 0.0, grid.r)):
            return p
    return None


@dataclass
class SweepRow:
    q: float
    amplitude: float
    outcome: str
    t_star: Optional[float]
    final_max: float
    steps: int
    config_hash: str
    sandwich: str = "n/a"
    warning: Optional[str] = None


def _run_cell(cfg: SolverConfig):
    return run(cfg)


def cell_config(base: SolverConfig, q: float, amplitude: float) -> SolverConfig:
    """Copy of ``base`` at exponent ``q`` and initial amplitude ``amplitude``.

    Exact-profile data is re-derived for the new ``q`` (extremal member of its box).
    """
    init = dataclasses.replace(base.init, amplitude=float(amplitude))
    if init.kind == "exact":
        box = admissible_params(base.field.n, base.field.alpha, q)
        if box is None:
            raise ConfigurationError(f"exact initial data needs supercritical q, got {q}")
        init = dataclasses.replace(init, params=box.params(t_shift=init.params.t_shift))
    return dataclasses.replace(base, q=float(q), init=init)


def dichotomy_sweep(base: SolverConfig, q_list: Sequence[float], amplitude_list: Sequence[float],
                    jobs: int = 1, check_sandwich: bool = True) -> list:
    """One run per ``(q, amplitude)``; supercritical cells are compared against an exact supersolution.

    Rows come back in ``q``-major order regardless of ``jobs``.
    """
    n, alpha = base.field.n, base.field.alpha
    q_crit = critical_exponent(n, alpha)
    if len(q_list) > 1 and not (min(q_list) <= q_crit < max(q_list)):
        warnings.warn(f"q_list does not straddle the critical exponent {q_crit:g}")
    cells = [cell_config(base, q, a) for q in q_list for a in amplitude_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell, cells))
    else:
        results = [run(c) for c in cells]
    rows = []
    grid = base.make_grid()
    for cfg, res in zip(cells, results):
        status = "n/a"
        if check_sandwich and cfg.q > q_crit and not res.blew_up:
            p = dominating_supersolution(cfg.field, cfg.q, cfg.init, grid)
            if p is not None:
                status = "pass" if sandwich_check(res, p) else "fail"
        rows.append(SweepRow(cfg.q, cfg.init.amplitude, res.outcome, res.t_star, res.final_max,
                             res.steps, res.config_hash, status, res.warning))
        logger.info("q=%g amplitude=%g -> %s t*=%s", cfg.q, cfg.init.amplitude, res.outcome, res.t_star)
    return rows
