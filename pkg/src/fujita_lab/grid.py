"""Radial grids, shell quadrature and discrete space-time fields."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .coefficients import CoefficientField
from .errors import DomainError, ShapeError


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1: two rays)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int, R: float) -> float:
    return sphere_area(n) * R**n / n


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_N`` with trapezoid weights for ``omega * r^(n-1) dr``."""

    n: int
    r: np.ndarray
    stretching: str = "uniform"
    ratio: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ShapeError("a radial grid needs at least two nodes")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise DomainError("radial nodes must start at 0 and increase strictly")
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, n: int, r_max: float, nodes: int) -> "RadialGrid":
        return cls(n, np.linspace(0.0, r_max, nodes))

    @classmethod
    def geometric(cls, n: int, r_max: float, h0: float, ratio: float) -> "RadialGrid":
        """First spacing ``h0``, each following spacing ``ratio`` times the previous.

        The last spacing is trimmed so that the grid ends exactly at ``r_max``.
        """
        if ratio <= 1.0:
            return cls.uniform(n, r_max, int(round(r_max / h0)) + 1)
        nodes = [0.0]
        h = h0
        while nodes[-1] + h < r_max - 0.5 * h:
            nodes.append(nodes[-1] + h)
            h *= ratio
        nodes.append(r_max)
        return cls(n, np.array(nodes), "geometric", ratio)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.r)

    @property
    def weights(self) -> np.ndarray:
        return self.weights_on(self.r)

    def weights_on(self, r: np.ndarray) -> np.ndarray:
        dr = np.diff(r)
        w = np.zeros_like(r)
        w[:-1] += dr / 2
        w[1:] += dr / 2
        return sphere_area(self.n) * r ** (self.n - 1) * w

    def cell_volumes(self) -> np.ndarray:
        """Exact shell volumes of the dual cells ``[r_{i-1/2}, r_{i+1/2}]`` (finite-volume weights)."""
        edges = np.concatenate([[0.0], 0.5 * (self.r[1:] + self.r[:-1]), [self.r[-1]]])
        return sphere_area(self.n) * (edges[1:] ** self.n - edges[:-1] ** self.n) / self.n

    def integrate(self, f) -> float:
        """Shell quadrature of a radial profile over the ball of radius ``r_max``."""
        return float(np.dot(self.weights, np.asarray(f, dtype=float)))


def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.size == 1:
        return np.zeros(1)
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


@dataclass
class GridFunction:
    """Values on a space-time grid, indexed ``values[time, radius]``."""

    grid: RadialGrid
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.ndim != 1 or np.any(np.diff(self.t) <= 0):
            raise ShapeError("time nodes must increase strictly")
        if self.values.shape != (self.t.size, self.grid.r.size):
            raise ShapeError(f"values shape {self.values.shape} does not match "
                             f"({self.t.size}, {self.grid.r.size})")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid function values must be finite")

    @classmethod
    def from_function(cls, grid: RadialGrid, t, fn: Callable) -> "GridFunction":
        t = np.asarray(t, dtype=float)
        T, R = np.meshgrid(t, grid.r, indexing="ij")
        return cls(grid, t, np.broadcast_to(fn(T, R), T.shape).astype(float))

    @property
    def mesh(self):
        return np.meshgrid(self.t, self.grid.r, indexing="ij")

    def like(self, values) -> "GridFunction":
        return GridFunction(self.grid, self.t, values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", "value"])
            for i, ti in enumerate(self.t):
                for j, rj in enumerate(self.grid.r):
                    w.writerow([f"{ti:.17g}", f"{rj:.17g}", f"{self.values[i, j]:.17g}"])

    @classmethod
    def from_csv(cls, path, n: int) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = np.unique(data[:, 0])
        r = np.unique(data[:, 1])
        if data.shape[0] != t.size * r.size:
            raise ShapeError("CSV rows do not form a tensor grid")
        order = np.lexsort((data[:, 1], data[:, 0]))
        return cls(RadialGrid(n, r), t, data[order, 2].reshape(t.size, r.size))


Weight = Union[None, float, np.ndarray, Callable]


def integrate_spacetime(f: GridFunction, weight: Weight = None) -> float:
    """Trapezoid in time times shell quadrature in space of ``f * weight``.

    ``weight`` may be a scalar, an array of the same shape as ``f.values`` or a
    callable ``weight(t, r)`` evaluated on the mesh.
    """
    vals = f.values
    if weight is not None:
        if callable(weight):
            T, R = f.mesh
            weight = weight(T, R)
        weight = np.asarray(weight, dtype=float)
        if weight.ndim and weight.shape != vals.shape:
            raise ShapeError(f"weight shape {weight.shape} does not match {vals.shape}")
        vals = vals * weight
    return float(trapezoid_weights(f.t) @ vals @ f.grid.weights)


def time_derivative(f: GridFunction) -> np.ndarray:
    return np.gradient(f.values, f.t, axis=0, edge_order=2)


def radial_derivative(f: GridFunction) -> np.ndarray:
    return np.gradient(f.values, f.grid.r, axis=1, edge_order=2)


def coefficient_on(f: GridFunction, field: CoefficientField) -> np.ndarray:
    if field.time_dependent:
        return np.stack([field.scalar(ti, f.grid.r) for ti in f.t])
    return np.broadcast_to(field.scalar(0.0, f.grid.r), f.values.shape)


def wlq_terms(w: GridFunction, field: CoefficientField, q: float):
    """The three terms of the discrete norm, returned separately."""
    if w.t.size < 3 or w.grid.r.size < 3:
        raise ShapeError("wlq_norm needs at least 3 time nodes and 3 radial nodes")
    if field.n != w.grid.n:
        raise ShapeError("field and grid dimensions differ")
    q_hat = max(1.0, q)
    w_t = time_derivative(w)
    w_r = radial_derivative(w)
    a = coefficient_on(w, field)
    time_term = integrate_spacetime(w.like(np.abs(w_t)))
    energy = integrate_spacetime(w.like(a * w_r**2))
    lq = integrate_spacetime(w.like(np.abs(w.values) ** q_hat))
    return time_term, math.sqrt(max(energy, 0.0)), lq ** (1.0 / q_hat)


def wlq_norm(w: GridFunction, field: CoefficientField, q: float) -> float:
    """Discrete ``int|w_t| + (int a|grad w|^2)^(1/2) + (int|w|^qh)^(1/qh)``, ``qh = max(1, q)``."""
    return float(sum(wlq_terms(w, field, q)))


def zero_extend(w: GridFunction, t_end: Optional[float] = None, r_max: Optional[float] = None,
                dt: Optional[float] = None, dr: Optional[float] = None) -> GridFunction:
    """Pad ``w`` with zeros up to ``t_end`` and ``r_max``."""
    t, r, vals = w.t, w.grid.r, w.values
    if t_end is not None and t_end > t[-1]:
        step = dt if dt is not None else float(np.diff(t)[-1])
        extra = np.arange(t[-1] + step, t_end + step, step)
        extra[-1] = max(extra[-1], t_end)
        t = np.concatenate([t, extra])
        vals = np.vstack([vals, np.zeros((extra.size, vals.shape[1]))])
    if r_max is not None and r_max > r[-1]:
        step = dr if dr is not None else float(np.diff(r)[-1])
        extra = np.arange(r[-1] + step, r_max + step, step)
        extra[-1] = max(extra[-1], r_max)
        r = np.concatenate([r, extra])
        vals = np.hstack([vals, np.zeros((vals.shape[0], extra.size))])
    return GridFunction(RadialGrid(w.grid.n, r), t, vals)
