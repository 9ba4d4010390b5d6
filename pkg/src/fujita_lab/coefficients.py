"""Isotropic diffusion coefficient fields and their growth envelopes.

A field is ``a_ij(t, x) = a(t, |x|) * delta_ij``.  Three families are
supported: the power family ``(1 + |x|^2)^((2 - alpha)/2)``, constants, and
piecewise-linear tables in the radius (optionally also in time).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ExtrapolationError

KINDS = ("power", "constant", "tabulated")

# samples per annulus when taking the sup of a tabulated field
DENSE_SAMPLES = 2049


@dataclass(frozen=True)
class CoefficientField:
    """Diffusion coefficient family with growth parameters.

    ``alpha`` and ``c_growth`` are the parameters of the growth condition
    ``envelope(R) <= c_growth * R**(2 - alpha)``.  For the power family
    ``alpha`` also fixes the profile.
    """

    kind: str
    n: int = 1
    alpha: float = 2.0
    c_growth: float = 1.0
    value: float = 0.0
    table_r: Optional[tuple] = field(default=None, repr=False)
    table_a: Optional[tuple] = field(default=None, repr=False)
    table_t: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError("dimension n must be a positive integer")
        if not self.c_growth > 0:
            raise ConfigurationError("c_growth must be positive")
        if self.kind == "constant" and self.value < 0:
            raise ConfigurationError("constant coefficient must be nonnegative")
        if self.kind == "tabulated":
            if self.table_r is None or self.table_a is None:
                raise ConfigurationError("tabulated field needs table_r and table_a")
            r = np.asarray(self.table_r, dtype=float)
            a = np.asarray(self.table_a, dtype=float)
            if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0):
                raise ConfigurationError("table_r must be strictly increasing with >= 2 entries")
            expected = (r.size,) if self.table_t is None else (len(self.table_t), r.size)
            if a.shape != expected:
                raise ConfigurationError(f"table_a has shape {a.shape}, expected {expected}")
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise ConfigurationError("tabulated coefficients must be finite and nonnegative")

    # -- constructors -------------------------------------------------------

    @classmethod
    def power(cls, alpha: float, n: int = 1, c_growth: float = 1.0) -> "CoefficientField":
        return cls("power", n=n, alpha=float(alpha), c_growth=c_growth)

    @classmethod
    def constant(cls, value: float, n: int = 1, c_growth: Optional[float] = None) -> "CoefficientField":
        # bounded coefficients satisfy the growth condition with alpha = 2
        c = c_growth if c_growth is not None else max(float(value), 1.0)
        return cls("constant", n=n, alpha=2.0, c_growth=c, value=float(value))

    @classmethod
    def tabulated(cls, r, a, n: int = 1, alpha: float = 2.0, c_growth: float = 1.0,
                  t=None) -> "CoefficientField":
        a = np.asarray(a, dtype=float)
        table_a = tuple(map(tuple, a)) if a.ndim == 2 else tuple(a.tolist())
        return cls("tabulated", n=n, alpha=float(alpha), c_growth=c_growth,
                   table_r=tuple(np.asarray(r, dtype=float).tolist()), table_a=table_a,
                   table_t=None if t is None else tuple(np.asarray(t, dtype=float).tolist()))

    @classmethod
    def from_csv(cls, path, n: int = 1, alpha: float = 2.0, c_growth: float = 1.0) -> "CoefficientField":
        """Load a time-independent table from a CSV of ``r,value`` rows (header optional)."""
        rows = []
        with open(Path(path), newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except ValueError:
                    if rows:
                        raise ConfigurationError(f"bad row in {path}: {rec}")
                    # header line
        if not rows:
            raise ConfigurationError(f"no data rows in {path}")
        r, a = zip(*sorted(rows))
        return cls.tabulated(r, a, n=n, alpha=alpha, c_growth=c_growth)

    # -- evaluation ---------------------------------------------------------

    @property
    def time_dependent(self) -> bool:
        return self.kind == "tabulated" and self.table_t is not None

    def scalar(self, t, r):
        """Isotropic multiplier ``a(t, r)``; vectorised over ``r``."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "power":
            return (1.0 + r * r) ** ((2.0 - self.alpha) / 2.0)
        if self.kind == "constant":
            return np.full(r.shape, self.value)
        return self._interp(t, r)

    def _interp(self, t, r):
        tr = np.asarray(self.table_r)
        lo, hi = tr[0], tr[-1]
        if np.any(r < lo - 1e-12 * max(1.0, abs(lo))) or np.any(r > hi * (1 + 1e-12)):
            raise ExtrapolationError(f"radius outside tabulated range [{lo}, {hi}]")
        r = np.clip(r, lo, hi)
        ta = np.asarray(self.table_a)
        if self.table_t is None:
            return np.interp(r, tr, ta)
        tt = np.asarray(self.table_t)
        t = float(t)
        if t < tt[0] or t > tt[-1]:
            raise ExtrapolationError(f"time {t} outside tabulated range [{tt[0]}, {tt[-1]}]")
        k = int(np.clip(np.searchsorted(tt, t, side="right") - 1, 0, tt.size - 2))
        w = (t - tt[k]) / (tt[k + 1] - tt[k])
        return (1 - w) * np.interp(r, tr, ta[k]) + w * np.interp(r, tr, ta[k + 1])

    def radial_range(self):
        if self.kind == "tabulated":
            return self.table_r[0], self.table_r[-1]
        return 0.0, math.inf

    def time_range(self):
        if self.time_dependent:
            return self.table_t[0], self.table_t[-1]
        return 0.0, math.inf


def eval_a(field: CoefficientField, t: float, x) -> np.ndarray:
    """Coefficient matrix ``a(t, x)`` at a single point ``x`` of R^n."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (field.n,):
        raise DomainError(f"point has shape {x.shape}, field dimension is {field.n}")
    if not np.all(np.isfinite(x)):
        raise DomainError("point must be finite")
    a = float(field.scalar(t, np.linalg.norm(x)))
    return a * np.eye(field.n)


def quadratic_bound(field: CoefficientField, t: float, x) -> float:
    """Smallest ``A(t, x)`` with ``xi^T a xi <= A |xi|^2``; equals ``a`` for isotropic fields."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(field.scalar(t, np.linalg.norm(x)))


def envelope(field: CoefficientField, R: float, sampling: int = DENSE_SAMPLES,
             t_range: Optional[tuple] = None) -> float:
    """Supremum of ``A(t, x)`` over the annulus ``R/2 < |x| < R``.

    Closed form for the power and constant families (the power profile is
    monotone in ``|x|``, so the sup sits at an end of the annulus).  Tabulated
    fields are sampled on ``sampling`` radii plus every table node inside the
    annulus, and on every table time if the field is time dependent.
    """
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    if field.kind == "constant":
        return field.value
    if field.kind == "power":
        expo = (2.0 - field.alpha) / 2.0
        if expo == 0:
            return 1.0
        r_star = R if expo > 0 else R / 2.0
        return (1.0 + r_star * r_star) ** expo
    r = np.linspace(R / 2.0, R, sampling)
    tr = np.asarray(field.table_r)
    r = np.union1d(r, tr[(tr > R / 2.0) & (tr < R)])
    if field.time_dependent:
        times = np.asarray(field.table_t)
        if t_range is not None:
            inside = times[(times > t_range[0]) & (times < t_range[1])]
            times = np.union1d(inside, [max(t_range[0], times[0]), min(t_range[1], times[-1])])
        return float(max(field.scalar(t, r).max() for t in times))
    return float(field.scalar(0.0, r).max())


@dataclass
class GrowthReport:
    alpha: float
    c_fitted: float
    R_samples: list
    envelope_values: list
    satisfied: bool


def check_growth(field: CoefficientField, R_grid: Sequence[float]) -> GrowthReport:
    """Evaluate the envelope on ``R_grid`` and compare with ``c_growth * R**(2 - alpha)``.

    ``c_fitted`` is the smallest constant for which the bound holds on the grid.
    """
    R = np.asarray(list(R_grid), dtype=float)
    if R.size == 0:
        raise DomainError("R_grid must not be empty")
    if np.any(R <= 1):
        raise DomainError("growth condition is checked for radii > 1 only")
    env = np.array([envelope(field, r) for r in R])
    bound = R ** (2.0 - field.alpha)
    c_fit = float(np.max(env / bound))
    satisfied = bool(np.all(env <= field.c_growth * bound))
    return GrowthReport(field.alpha, c_fit, R.tolist(), env.tolist(), satisfied)
