"""Closed-form entire solutions of the differential inequality and their parameter boxes.

The supercritical family is

    u(t, x) = kappa * s**(-beta) * exp(-gamma * (1 + |x|^2)**(alpha_hat/2) / s),
    s = t + 1 + t_shift,

paired with the power coefficient ``(1 + |x|^2)**((2 - alpha_hat)/2)``.  With
that pairing the flux ``a * grad u`` is ``-u * gamma * alpha_hat * x / s``,
which is what makes every derivative below closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .coefficients import CoefficientField
from .errors import ConfigurationError, DomainError

RESIDUAL_TOL = 1e-10


def critical_exponent(n: int, alpha: float) -> float:
    if n < 1:
        raise DomainError("dimension must be >= 1")
    return 1 + alpha / n


def surrogate_alpha(n: int, q: float) -> float:
    """Default positive stand-in exponent for nonpositive growth parameters."""
    if not q > 1:
        raise DomainError("a surrogate exponent needs q > 1")
    return n * (q - 1) / 2


def _exact(v):
    return v if isinstance(v, (int, Fraction)) else Fraction(v)


def is_supercritical(n: int, alpha_hat, q) -> bool:
    """Exact test of ``q > 1 + alpha_hat/n`` on the binary values given."""
    return _exact(q) - 1 > _exact(alpha_hat) / n


@dataclass(frozen=True)
class ExactSolutionParams:
    n: int
    alpha_hat: float
    q: float
    gamma: float
    kappa: float
    t_shift: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("dimension must be >= 1")
        if not self.alpha_hat > 0:
            raise DomainError("alpha_hat must be positive")
        if not self.q > 1:
            raise DomainError("the supercritical family needs q > 1")
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if self.t_shift < 0:
            raise DomainError("t_shift must be nonnegative")

    @property
    def beta(self) -> float:
        return 1.0 / (self.q - 1)

    def in_box(self) -> bool:
        box = admissible_params(self.n, self.alpha_hat, self.q)
        return box is not None and box.contains(self.gamma, self.kappa)


@dataclass(frozen=True)
class ParameterBox:
    """Admissible ``(gamma, kappa)`` region for fixed ``(n, alpha_hat, q)``.

    ``gamma`` ranges over the half-open interval ``(gamma_lo, gamma_hi]`` and
    ``kappa`` over ``(0, kappa_max(gamma)]``.
    """

    n: int
    alpha_hat: float
    q: float
    beta: float
    gamma_lo: float
    gamma_hi: float

    def kappa_max(self, gamma: float) -> float:
        if not self.gamma_lo < gamma <= self.gamma_hi:
            raise DomainError(f"gamma={gamma} outside ({self.gamma_lo}, {self.gamma_hi}]")
        return (self.alpha_hat * self.n * (gamma - self.gamma_lo)) ** (1.0 / (self.q - 1))

    def contains(self, gamma: float, kappa: float) -> bool:
        if not self.gamma_lo < gamma <= self.gamma_hi:
            return False
        return 0 < kappa <= self.kappa_max(gamma)

    def params(self, gamma: Optional[float] = None, kappa: Optional[float] = None,
               t_shift: float = 0.0) -> ExactSolutionParams:
        """Member of the box; defaults to the largest gamma and kappa."""
        gamma = self.gamma_hi if gamma is None else gamma
        kappa = self.kappa_max(gamma) if kappa is None else kappa
        if not self.contains(gamma, kappa):
            raise DomainError("(gamma, kappa) outside the admissible box")
        return ExactSolutionParams(self.n, float(self.alpha_hat), float(self.q), float(gamma),
                                   float(kappa), t_shift)


def admissible_params(n: int, alpha_hat, q) -> Optional[ParameterBox]:
    """Parameter box of the supercritical family, or ``None`` when it is empty.

    Emptiness is decided exactly (rational arithmetic on the given values), so
    ``q == 1 + alpha_hat/n`` given as Fractions lands on the empty side.
    """
    if n < 1:
        raise DomainError("dimension must be >= 1")
    if not alpha_hat > 0:
        raise DomainError("alpha_hat must be positive; map nonpositive alpha to a surrogate first")
    if not q > 1:
        raise DomainError("q must exceed 1")
    if not is_supercritical(n, alpha_hat, q):
        return None
    a, qf = float(alpha_hat), float(q)
    return ParameterBox(n=n, alpha_hat=a, q=qf, beta=1.0 / (qf - 1),
                        gamma_lo=1.0 / (a * n * (qf - 1)), gamma_hi=1.0 / (a * a))


def eval_u(p: ExactSolutionParams, t, r):
    """Value of the exact solution; ``r`` is ``|x|`` (arrays broadcast)."""
    s = np.asarray(t, dtype=float) + 1.0 + p.t_shift
    rho = 1.0 + np.asarray(r, dtype=float) ** 2
    return p.kappa * s ** (-p.beta) * np.exp(-p.gamma * rho ** (p.alpha_hat / 2) / s)


def derivatives(p: ExactSolutionParams, t, r):
    """Closed-form ``(u, u_t, u_r, Lu)`` for the paired power coefficient."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    s = t + 1.0 + p.t_shift
    rho = 1.0 + r * r
    a_h = p.alpha_hat
    phi = rho ** (a_h / 2)
    u = p.kappa * s ** (-p.beta) * np.exp(-p.gamma * phi / s)
    u_t = u * (-p.beta / s + p.gamma * phi / s**2)
    g = rho ** (a_h / 2 - 1)
    u_r = -u * p.gamma * a_h * g * r / s
    lu = u * (-p.gamma * a_h * p.n / s + (p.gamma * a_h) ** 2 * g * r * r / s**2)
    return u, u_t, u_r, lu


def _check_pairing(p: ExactSolutionParams, field: CoefficientField):
    if field.kind != "power" or field.alpha != p.alpha_hat or field.n != p.n:
        raise ConfigurationError(
            "residuals are closed form only for the power field with the same alpha_hat and n "
            f"(params alpha_hat={p.alpha_hat}, n={p.n}; field {field.kind}, alpha={field.alpha}, n={field.n})")


def residual_ineq4(p: ExactSolutionParams, field: CoefficientField, t, r):
    """``u_t - Lu - u^q``; nonnegative wherever ``u`` is a supersolution."""
    _check_pairing(p, field)
    u, u_t, _, lu = derivatives(p, t, r)
    return u_t - lu - u**p.q


def residual_ineq5(p: ExactSolutionParams, field: CoefficientField, t, r):
    """``v_t - Lv - |v|^(q-1) v`` for ``v = -u``; nonpositive for a subsolution."""
    _check_pairing(p, field)
    u, u_t, _, lu = derivatives(p, t, r)
    v, v_t, lv = -u, -u_t, -lu
    return v_t - lv - np.abs(v) ** (p.q - 1) * v


def residual_example1(q: float, t):
    """Residual of ``u = e^t`` (``Lu = 0``) for ``q <= 1``."""
    if q > 1:
        raise DomainError("the exponential solution only covers q <= 1")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    return np.exp(t) - np.exp(q * t)


@dataclass
class ResidualReport:
    min_residual: float
    argmin: tuple
    samples: int
    tolerance: float
    verdict: bool


def sample_points(n: int, count: int, t_max: float = 10.0, r_max: float = 20.0,
                  rng: Optional[np.random.Generator] = None):
    """Random ``(t, |x|)`` pairs, uniform in time and uniform in the ball volume.

    The four corners of the box are always included.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    t = rng.uniform(0.0, t_max, count)
    r = r_max * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    t[:4] = [0.0, 0.0, t_max, t_max]
    r[:4] = [0.0, r_max, 0.0, r_max]
    return t, r


def residual_sweep(p: ExactSolutionParams, field: CoefficientField, count: int = 10_000,
                   t_max: float = 10.0, r_max: float = 20.0, tol: float = RESIDUAL_TOL,
                   rng: Optional[np.random.Generator] = None) -> ResidualReport:
    t, r = sample_points(p.n, count, t_max, r_max, rng)
    res = residual_ineq4(p, field, t, r)
    k = int(np.argmin(res))
    return ResidualReport(float(res[k]), (float(t[k]), float(r[k])), int(res.size), tol,
                          bool(res[k] >= -tol))


def sign_flip_check(p: ExactSolutionParams, field: CoefficientField, t, r,
                    tol: float = RESIDUAL_TOL) -> bool:
    """True iff ``v = -u`` satisfies the reversed inequality at every sample."""
    return bool(np.all(residual_ineq5(p, field, t, r) <= tol))


def example_field(p: ExactSolutionParams) -> CoefficientField:
    """Power coefficient field paired with ``p``; its growth constant is fitted on R in [1, 1e6]."""
    expo = (2.0 - p.alpha_hat) / 2.0
    R = np.geomspace(1.0, 1e6, 200)[1:]
    env = np.where(expo >= 0, (1 + R * R) ** expo, (1 + R * R / 4) ** expo)
    c = float(np.max(env / R ** (2 - p.alpha_hat)))
    return CoefficientField.power(p.alpha_hat, n=p.n, c_growth=c * (1 + 1e-12))


def violating_gamma(alpha_hat: float, factor: float = 1.5) -> float:
    """A gamma above the admissible upper end, for sharpness probes."""
    return factor / alpha_hat**2


def kappa_bound(n: int, alpha_hat: float, q: float, gamma: float) -> float:
    """Kappa bound formula evaluated without the box check on gamma's upper end."""
    lo = 1.0 / (alpha_hat * n * (q - 1))
    if gamma <= lo:
        raise DomainError("gamma must exceed the lower end of the box")
    return (alpha_hat * n * (gamma - lo)) ** (1.0 / (q - 1))


__all__ = [
    "ExactSolutionParams", "ParameterBox", "ResidualReport", "admissible_params",
    "critical_exponent", "derivatives", "eval_u", "example_field", "is_supercritical",
    "kappa_bound", "residual_example1", "residual_ineq4", "residual_ineq5", "residual_sweep",
    "sample_points", "sign_flip_check", "surrogate_alpha", "violating_gamma",
]
