"""Cutoff test functions and the scaling of the capacity integrals.

The space-time cutoff is ``zeta(t, x) = psi(t/T) * psi(2|x|^2/R^2)`` with
``T = R**alpha``.  ``psi`` is a quintic smoothstep equal to 1 on ``[0, 1/2]``
and 0 on ``[1, inf)``; it is C^2, which is all the integrals below need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .coefficients import CoefficientField, envelope
from .errors import CoverageError, DomainError, ResolutionError, ShapeError
from .grid import GridFunction, RadialGrid, coefficient_on, integrate_spacetime, trapezoid_weights

# sup |psi'| of the quintic smoothstep squeezed onto [1/2, 1]: 2 * 15/8
PSI_PRIME_SUP = 15.0 / 4.0

# normalisation constant of the certificate, see calibrate_c8()
C8 = 214.15036814625822

SLOPE_RTOL = 0.05
REFINE_RTOL = 0.02


def psi(s):
    s = np.asarray(s, dtype=float)
    y = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return 1.0 - y**3 * (10.0 - 15.0 * y + 6.0 * y * y)


def psi_prime(s):
    s = np.asarray(s, dtype=float)
    y = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return -60.0 * y * y * (1.0 - y) ** 2


@lru_cache(maxsize=None)
def profile_constant() -> float:
    """The constant c7 with ``|zeta_t| <= c7/T`` and ``|grad zeta| <= c7/R``.

    ``|grad zeta| * R = 4 (r/R) |psi'(2r^2/R^2)|``; with ``sigma = 2r^2/R^2``
    this is ``2 sqrt(2 sigma) |psi'(sigma)|`` on ``[1/2, 1]``.
    """
    res = minimize_scalar(lambda s: -2.0 * math.sqrt(2.0 * s) * abs(float(psi_prime(s))),
                          bounds=(0.5, 1.0), method="bounded", options={"xatol": 1e-12})
    return max(PSI_PRIME_SUP, -float(res.fun))


def default_nu(q: float) -> float:
    return min(0.1, (q - 1.0) / 4.0)


def default_s(q: float, nu: float) -> float:
    return float(math.ceil(2.0 * (q - nu) / (q - 1.0)) + 2)


def holder_d(q: float, nu: float) -> float:
    """Exponent ``d`` with ``d (1 + nu) = q``."""
    return q / (1.0 + nu)


@dataclass(frozen=True)
class CutoffConfig:
    T: float
    R: float
    s: float
    nu: float
    tau: float = 0.0

    def __post_init__(self):
        if not (self.T > 0 and self.R > 0):
            raise DomainError("T and R must be positive")
        if not 0 < self.nu < 1:
            raise DomainError("nu must lie in (0, 1)")
        if self.s < 2 or self.tau < 0:
            raise DomainError("need s >= 2 and tau >= 0")

    @classmethod
    def for_radius(cls, R: float, alpha: float, q: float, nu: Optional[float] = None,
                   s: Optional[float] = None, tau: float = 0.0) -> "CutoffConfig":
        """Cutoff on ``[0, R**alpha] x B(R)`` with the default (or given) ``nu`` and ``s``."""
        if not q > 1:
            raise DomainError("capacity estimates need q > 1")
        nu = default_nu(q) if nu is None else nu
        if not nu < q - 1:
            raise DomainError(f"nu={nu} must be below q-1={q - 1}")
        s_min = 2.0 * (q - nu) / (q - 1.0) + 2.0
        s = default_s(q, nu) if s is None else s
        if s < s_min:
            raise DomainError(f"s={s} below the nonnegativity bound {s_min}")
        return cls(T=float(R) ** alpha, R=float(R), s=float(s), nu=float(nu), tau=tau)


def zeta(cfg: CutoffConfig, t, r):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("zeta is defined for t >= 0")
    r = np.asarray(r, dtype=float)
    return psi(t / cfg.T) * psi(2.0 * r * r / cfg.R**2)


def zeta_t(cfg: CutoffConfig, t, r):
    r = np.asarray(r, dtype=float)
    return psi_prime(np.asarray(t, dtype=float) / cfg.T) / cfg.T * psi(2.0 * r * r / cfg.R**2)


def zeta_r(cfg: CutoffConfig, t, r):
    """Radial derivative; ``|grad zeta| = |zeta_r|`` for this radial cutoff."""
    r = np.asarray(r, dtype=float)
    return (psi(np.asarray(t, dtype=float) / cfg.T) * psi_prime(2.0 * r * r / cfg.R**2)
            * 4.0 * r / cfg.R**2)


def eta(cfg: CutoffConfig, t):
    """Time cutoff: 0 on ``[0, tau]``, 1 on ``[2 tau, inf)``; identically 1 when ``tau = 0``."""
    t = np.asarray(t, dtype=float)
    if cfg.tau == 0:
        return np.ones_like(t)
    return 1.0 - psi(t / (2.0 * cfg.tau))


def eta_prime(cfg: CutoffConfig, t):
    t = np.asarray(t, dtype=float)
    if cfg.tau == 0:
        return np.zeros_like(t)
    return -psi_prime(t / (2.0 * cfg.tau)) / (2.0 * cfg.tau)


def derivative_bounds(cfg: CutoffConfig, samples: int = 4001):
    """``(sup|zeta_t| * T, sup|grad zeta| * R)`` sampled on a dense grid.

    The cutoff factorises, so each sup is a product of 1-D maxima.
    """
    t = np.linspace(0.0, cfg.T, samples)
    r = np.linspace(0.0, cfg.R, samples)
    space = psi(2.0 * r * r / cfg.R**2)
    time = psi(t / cfg.T)
    sup_t = np.max(np.abs(psi_prime(t / cfg.T))) / cfg.T * np.max(space)
    sup_x = np.max(time) * np.max(np.abs(psi_prime(2.0 * r * r / cfg.R**2) * 4.0 * r / cfg.R**2))
    return float(sup_t * cfg.T), float(sup_x * cfg.R)


def scaling_exponents(n: int, alpha, q, nu):
    """Powers of R in front of the two right-hand terms of the final estimate.

    The shared bracket ``q - 1 - alpha/n`` is formed in exact rational arithmetic,
    so it is exactly zero at the critical exponent.
    """
    if not q > 1:
        raise DomainError("q must exceed 1")
    if not 0 < nu < q - 1:
        raise DomainError("nu must lie in (0, q-1)")
    Fq, Fa, Fnu = (v if isinstance(v, (int, Fraction)) else Fraction(v) for v in (q, alpha, nu))
    bracket = Fq - 1 - Fa / n
    e1 = Fraction(n) / (Fq - 1) * bracket
    e2 = Fraction(n) * (2 * Fq - 1 - Fnu) / (2 * Fq * (Fq - 1)) * bracket
    return float(e1), float(e2)


def predicted_slopes(n: int, alpha: float, q: float, nu: float) -> dict:
    d = holder_d(q, nu)
    base = n + alpha
    return {
        "J_time": base - alpha * q / (q - 1),
        "J_time_qnu": base - alpha * (q - nu) / (q - 1),
        "J_space_d": base - alpha * d / (d - 1),
        "J_space_qnu": base - alpha * (q - nu) / (q - 1),
    }


@dataclass
class CapacityRow:
    R: float
    T: float
    envelope: float
    J_time: float
    J_time_qnu: float
    J_space_d: float
    J_space_qnu: float


def _integrals(cfg: CutoffConfig, field: CoefficientField, q: float, nt: int, nr: int,
               window: Optional[tuple]):
    t_hi, r_hi = (cfg.T, cfg.R) if window is None else window
    grid = RadialGrid.uniform(field.n, r_hi, nr)
    t = np.linspace(0.0, t_hi, nt)
    Tm, Rm = np.meshgrid(t, grid.r, indexing="ij")
    e2 = eta(cfg, Tm) ** 2
    zt = np.abs(zeta_t(cfg, Tm, Rm))
    zr = np.abs(zeta_r(cfg, Tm, Rm))
    d = holder_d(q, cfg.nu)
    p_qnu = (q - cfg.nu) / (q - 1.0)
    A = envelope(field, cfg.R)

    def quad(vals):
        return float(trapezoid_weights(t) @ vals @ grid.weights)

    return np.array([
        quad(zt ** (q / (q - 1.0)) * e2),
        quad(zt**p_qnu * e2),
        A ** (d / (d - 1.0)) * quad(zr ** (2.0 * d / (d - 1.0)) * e2),
        A**p_qnu * quad(zr ** (2.0 * p_qnu) * e2),
    ])


def capacity_integrals(cfg: CutoffConfig, field: CoefficientField, q: float, nt: int = 401,
                       nr: int = 401, window: Optional[tuple] = None,
                       refine_rtol: float = REFINE_RTOL) -> CapacityRow:
    """Time-derivative and envelope-weighted gradient integrals of the cutoff over ``[0,T] x B(R)``.

    The quadrature is repeated on a grid refined by two in each direction and
    the refined values are returned; a change above ``refine_rtol`` raises
    :class:`ResolutionError`.  ``window=(t_max, r_max)`` restricts the domain.
    """
    if not math.isclose(cfg.T, cfg.R**field.alpha, rel_tol=1e-12):
        raise DomainError(f"T={cfg.T} must equal R**alpha={cfg.R ** field.alpha}")
    if not q > 1:
        raise DomainError("q must exceed 1")
    coarse = _integrals(cfg, field, q, nt, nr, window)
    fine = _integrals(cfg, field, q, 2 * nt - 1, 2 * nr - 1, window)
    scale = np.maximum(np.abs(fine), 1e-300)
    change = np.where(fine == 0, np.abs(coarse), np.abs(coarse - fine) / scale)
    if np.any(change > refine_rtol):
        raise ResolutionError(f"quadrature not converged (relative change {change.max():.3g})")
    return CapacityRow(cfg.R, cfg.T, envelope(field, cfg.R), *map(float, fine))


def fit_slope(R: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(R), np.log(values), 1)[0])


def slope_ok(fitted: float, predicted: float, rtol: float = SLOPE_RTOL) -> bool:
    """Relative agreement; a predicted slope of 0 is compared with absolute tolerance ``rtol``."""
    scale = abs(predicted) if predicted != 0 else 1.0
    return abs(fitted - predicted) <= rtol * scale


@dataclass
class CapacityReport:
    n: int
    alpha: float
    q: float
    nu: float
    s: float
    rows: list
    slopes: dict
    predicted: dict
    within: dict
    e1: float
    e2: float
    certificates: list = field(default_factory=list)

    @property
    def R_list(self):
        return [row.R for row in self.rows]

    @property
    def ok(self) -> bool:
        return all(self.within.values())


def capacity_report(field_: CoefficientField, q: float, R_list: Sequence[float],
                    nu: Optional[float] = None, s: Optional[float] = None,
                    nt: int = 401, nr: int = 401, e_q=None) -> CapacityReport:
    """Evaluate the capacity integrals over ``R_list`` and fit their log-log slopes.

    ``e_q`` may carry an exact (Fraction) value of ``q`` for the exponent formulas.
    """
    if len(R_list) < 3:
        raise DomainError("need >= 3 radii for slope fit")
    if field_.alpha <= 0:
        raise DomainError("capacity scaling needs alpha > 0")
    qf = float(q)
    nu = default_nu(qf) if nu is None else nu
    rows = []
    for R in R_list:
        cfg = CutoffConfig.for_radius(R, field_.alpha, qf, nu=nu, s=s)
        rows.append(capacity_integrals(cfg, field_, qf, nt, nr))
    Rs = [row.R for row in rows]
    predicted = predicted_slopes(field_.n, field_.alpha, qf, nu)
    slopes, within = {}, {}
    for key, pred in predicted.items():
        vals = [getattr(row, key) for row in rows]
        if min(vals) <= 0:
            slopes[key] = math.nan
            within[key] = False
            continue
        slopes[key] = fit_slope(Rs, vals)
        within[key] = slope_ok(slopes[key], pred)
    e1, e2 = scaling_exponents(field_.n, field_.alpha, q if e_q is None else e_q, nu)
    cfg0 = CutoffConfig.for_radius(Rs[0], field_.alpha, qf, nu=nu, s=s)
    return CapacityReport(field_.n, field_.alpha, qf, nu, cfg0.s, rows, slopes, predicted, within,
                          e1, e2)


@dataclass
class CertificateResult:
    lhs: float
    rhs: float
    rhs_time: float
    rhs_space: float
    ratio: float
    verdict: bool
    e1: float
    e2: float


def _certificate_integrals(w: GridFunction, q: float, cfg: CutoffConfig):
    if w.t[0] > 0 or w.t[-1] < cfg.T or w.grid.r_max < cfg.R:
        raise CoverageError(
            f"grid function covers t in [{w.t[0]}, {w.t[-1]}], r <= {w.grid.r_max}; "
            f"need [0, {cfg.T}] x B({cfg.R})")
    if np.any(w.values < 0):
        raise DomainError("certificate needs w >= 0")
    Tm, Rm = w.mesh
    dens = w.values**q * zeta(cfg, Tm, Rm) ** cfg.s * eta(cfg, Tm) ** 2
    full = integrate_spacetime(w.like(dens))
    half = integrate_spacetime(w.like(np.where(Tm >= cfg.T / 2, dens, 0.0)))
    ann = integrate_spacetime(w.like(np.where((Rm > cfg.R / 2) & (Rm < cfg.R), dens, 0.0)))
    return full, half, ann


def certificate(w: GridFunction, field_: CoefficientField, q: float, cfg: CutoffConfig,
                c8: float = C8) -> CertificateResult:
    """Both sides of the final capacity estimate for a nonnegative ``w``.

    ``ratio`` is RHS/LHS (infinite when LHS vanishes and RHS does not, 1 when both vanish).
    """
    if w.grid.n != field_.n:
        raise ShapeError("grid and field dimensions differ")
    full, half, ann = _certificate_integrals(w, q, cfg)
    e1, e2 = scaling_exponents(field_.n, field_.alpha, q, cfg.nu)
    d = holder_d(q, cfg.nu)
    rhs_time = c8 * cfg.R**e1 * half ** (1.0 / q)
    rhs_space = c8 * cfg.R**e2 * ann ** (1.0 / (2.0 * d))
    rhs = rhs_time + rhs_space
    if full > 0:
        ratio = rhs / full
    else:
        ratio = 1.0 if rhs == 0 else math.inf
    return CertificateResult(full, rhs, rhs_time, rhs_space, ratio, bool(full <= rhs), e1, e2)


def calibrate_c8(R: float = 8.0, samples: int = 801) -> float:
    """Normalisation making the estimate tight for ``w = 1`` at ``R = 8`` in the
    reference case ``n = 1``, ``alpha = 2``, ``q = 2`` (default ``nu``, ``s``)."""
    cfg = CutoffConfig.for_radius(R, 2.0, 2.0)
    grid = RadialGrid.uniform(1, R, samples)
    w = GridFunction(grid, np.linspace(0.0, cfg.T, samples), np.ones((samples, samples)))
    unit = certificate(w, CoefficientField.power(2.0), 2.0, cfg, c8=1.0)
    return unit.lhs / unit.rhs


def mesh_factor(f: GridFunction) -> float:
    """``1 + (h/0.01)^2`` with ``h`` the coarsest space or time spacing."""
    h = max(float(np.max(np.diff(f.t))), float(np.max(f.grid.h)))
    return 1.0 + (h / 0.01) ** 2


def weak_residual(u: GridFunction, v: GridFunction, phi: GridFunction, field_: CoefficientField,
                  q: float) -> float:
    """Discrete weak-form defect ``W(u; phi) - W(v; phi)`` with
    ``W(u; phi) = int u_t phi + a phi_r u_r - |u|^(q-1) u phi``.

    Nonnegative (up to discretisation error) when ``u`` is a supersolution and
    ``v`` a subsolution, for ``phi >= 0``.
    """
    for g in (v, phi):
        if g.values.shape != u.values.shape or not np.array_equal(g.t, u.t) \
                or not np.array_equal(g.grid.r, u.grid.r):
            raise ShapeError("u, v and phi must share one space-time grid")
    scale = float(np.max(np.abs(phi.values)))
    edges = np.concatenate([phi.values[0], phi.values[-1], phi.values[:, -1]])
    if scale > 0 and np.max(np.abs(edges)) > 1e-12 * scale:
        raise CoverageError("phi not compactly supported on grid")
    a = coefficient_on(u, field_)
    phi_r = np.gradient(phi.values, u.grid.r, axis=1, edge_order=2)

    def form(g: GridFunction):
        g_t = np.gradient(g.values, g.t, axis=0, edge_order=2)
        g_r = np.gradient(g.values, g.grid.r, axis=1, edge_order=2)
        src = np.sign(g.values) * np.abs(g.values) ** q
        return integrate_spacetime(g.like(g_t * phi.values + a * phi_r * g_r - src * phi.values))

    if u is v:
        return 0.0
    return form(u) - form(v)


def bump(t, r, t_c: float, r_c: float, w_t: float, w_r: float):
    """Nonnegative C^3 bump ``(1 - y_t^2)^4 (1 - y_r^2)^4`` on a box."""
    yt = (np.asarray(t, dtype=float) - t_c) / w_t
    yr = (np.asarray(r, dtype=float) - r_c) / w_r
    bt = np.where(np.abs(yt) < 1, (1 - yt * yt) ** 4, 0.0)
    br = np.where(np.abs(yr) < 1, (1 - yr * yr) ** 4, 0.0)
    return bt * br
