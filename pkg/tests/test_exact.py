import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fujita_lab.coefficients import CoefficientField
from fujita_lab.errors import ConfigurationError, DomainError
from fujita_lab.exact import (ExactSolutionParams, admissible_params, critical_exponent,
                              derivatives, eval_u, example_field, is_supercritical, kappa_bound,
                              residual_example1, residual_ineq4, residual_ineq5, residual_sweep,
                              sample_points, sign_flip_check, surrogate_alpha, violating_gamma)
from oracles import fd_residual


@pytest.mark.parametrize("n, alpha, expected", [(1, 2, 3), (2, 2, 2), (3, 0, 1)])
def test_critical_exponent(n, alpha, expected):
    assert critical_exponent(n, alpha) == expected


def test_box_reference_values():
    box = admissible_params(1, 2, 4)
    assert box.beta == pytest.approx(1 / 3)
    assert (box.gamma_lo, box.gamma_hi) == pytest.approx((1 / 6, 1 / 4))
    assert box.kappa_max(0.25) == pytest.approx((1 / 6) ** (1 / 3), rel=1e-14)
    assert box.kappa_max(0.25) == pytest.approx(0.5503, abs=1e-4)

    box = admissible_params(2, 1, 2)
    assert box.beta == 1
    assert (box.gamma_lo, box.gamma_hi) == (0.5, 1.0)
    assert box.kappa_max(1.0) == pytest.approx(1.0)


def test_box_empty_at_critical():
    assert admissible_params(1, 2, 3) is None
    assert admissible_params(3, Fraction(1), Fraction(4, 3)) is None
    assert admissible_params(3, Fraction(1), Fraction(4, 3) + Fraction(1, 10**12)) is not None


def test_box_rejects_out_of_range_gamma():
    box = admissible_params(1, 2, 4)
    assert not box.contains(1 / 6, 0.1)
    assert not box.contains(0.3, 0.1)
    assert not box.contains(0.25, box.kappa_max(0.25) * 1.001)
    with pytest.raises(DomainError):
        box.params(gamma=0.3)


@given(st.integers(1, 5), st.fractions(Fraction(1, 8), 4, max_denominator=64),
       st.fractions(Fraction(-2), 3, max_denominator=64))
def test_box_nonempty_iff_supercritical(n, alpha_hat, offset):
    q = 1 + alpha_hat / n + offset
    assume(q > 1)
    assert (admissible_params(n, alpha_hat, q) is not None) == (offset > 0)


def test_eval_u_values():
    p = ExactSolutionParams(1, 2.0, 4.0, 0.25, 0.55)
    assert eval_u(p, 0.0, 0.0) == pytest.approx(0.55 * math.exp(-0.25), rel=1e-15)
    assert eval_u(p, 1.0, 1.0) == pytest.approx(0.55 * 2 ** (-1 / 3) * math.exp(-0.25), rel=1e-15)


def test_eval_u_decays_like_power_of_t():
    p = admissible_params(2, 1, 3).params()
    t = np.array([1e4, 1e5, 1e6])
    slope = np.diff(np.log(eval_u(p, t, 1.0))) / np.diff(np.log(t))
    np.testing.assert_allclose(slope, -p.beta, rtol=1e-3)


def test_params_validation():
    with pytest.raises(DomainError):
        ExactSolutionParams(1, 2.0, 4.0, 0.25, 0.0)
    with pytest.raises(DomainError):
        ExactSolutionParams(1, 2.0, 1.0, 0.25, 0.5)
    with pytest.raises(DomainError):
        ExactSolutionParams(0, 2.0, 4.0, 0.25, 0.5)
    with pytest.raises(DomainError):
        admissible_params(1, 0.0, 4.0)


def test_power_field_residual_sweep():
    p = admissible_params(1, 2, 4).params()
    rep = residual_sweep(p, example_field(p), count=10_000)
    assert rep.verdict and rep.min_residual >= -1e-10
    assert rep.samples == 10_000


def test_residual_requires_paired_field():
    p = admissible_params(1, 2, 4).params()
    with pytest.raises(ConfigurationError):
        residual_ineq4(p, CoefficientField.power(1.0), 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        residual_ineq4(p, CoefficientField.power(2.0, n=2), 0.0, 1.0)


@pytest.mark.parametrize("n, alpha_hat, q", [(1, 2, 4), (2, 1, 3), (3, 3, 3)])
def test_gamma_above_box_breaks_inequality(n, alpha_hat, q):
    g = violating_gamma(alpha_hat, 1.1)
    p = ExactSolutionParams(n, alpha_hat, q, g, kappa_bound(n, alpha_hat, q, g))
    t, r = sample_points(n, 200_000, rng=np.random.default_rng(1))
    assert residual_ineq4(p, example_field(p), t, r).min() < 0
    assert not sign_flip_check(p, example_field(p), t, r)


def test_gamma_slightly_above_box_breaks_inequality_far_out():
    # 1% above the upper end: the violation sits at larger |x|
    n, alpha_hat, q = 2, 1.0, 3.0
    g = violating_gamma(alpha_hat, 1.01)
    p = ExactSolutionParams(n, alpha_hat, q, g, kappa_bound(n, alpha_hat, q, g))
    T, R = np.meshgrid(np.linspace(0, 2, 201), np.linspace(0, 2000, 2001), indexing="ij")
    assert residual_ineq4(p, example_field(p), T, R).min() < 0


def test_sign_flip_on_admissible_params():
    p = admissible_params(2, 1, 3).params()
    t, r = sample_points(2, 5000)
    assert sign_flip_check(p, example_field(p), t, r)


@given(st.integers(1, 3), st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.floats(0.05, 2.0),
       st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_oddness_symmetry(n, alpha_hat, dq, t, r):
    p = admissible_params(n, alpha_hat, 1 + alpha_hat / n + dq).params()
    f = example_field(p)
    r4, r5 = residual_ineq4(p, f, t, r), residual_ineq5(p, f, t, r)
    u, u_t, _, lu = derivatives(p, t, r)
    assert abs(r5 + r4) <= 4 * np.finfo(float).eps * (abs(u_t) + abs(lu) + u**p.q)


@given(st.integers(1, 3), st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.floats(0.05, 2.0),
       st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 10.0), st.floats(0.0, 20.0))
def test_residual_nonnegative_across_box(n, alpha_hat, dq, gfrac, kfrac, t, r):
    box = admissible_params(n, alpha_hat, 1 + alpha_hat / n + dq)
    gamma = box.gamma_lo + max(gfrac, 1e-6) * (box.gamma_hi - box.gamma_lo)
    kappa = max(kfrac, 1e-6) * box.kappa_max(gamma)
    p = box.params(gamma, kappa)
    assert residual_ineq4(p, example_field(p), t, r) >= -1e-10


def test_closed_form_matches_richardson_oracle():
    rng = np.random.default_rng(11)
    worst = 0.0
    for n, alpha_hat, dq in [(1, 2.0, 1.0), (2, 1.0, 0.5), (3, 3.0, 0.1), (1, 0.5, 0.1)]:
        p = admissible_params(n, alpha_hat, 1 + alpha_hat / n + dq).params()
        t = rng.uniform(0.0, 10.0, 250)
        r = rng.uniform(0.05, 20.0, 250)
        ref, scale = fd_residual(p, example_field(p), t, r)
        u, u_t, _, lu = derivatives(p, t, r)
        ok = u > 0
        closed = (u_t - lu - u**p.q)[ok] / u[ok]
        worst = max(worst, float(np.max(np.abs(closed - ref[ok]) / scale[ok])))
    assert worst < 1e-6


def test_gradient_matches_finite_difference():
    p = admissible_params(2, 1, 3).params()
    r = np.linspace(0.1, 10, 50)
    h = 1e-6
    _, _, u_r, _ = derivatives(p, 1.0, r)
    fd = (eval_u(p, 1.0, r + h) - eval_u(p, 1.0, r - h)) / (2 * h)
    np.testing.assert_allclose(u_r, fd, rtol=1e-6, atol=1e-14)


def test_exponential_residual_values():
    np.testing.assert_array_equal(residual_example1(1.0, np.linspace(0, 5, 11)), 0.0)
    assert residual_example1(0.5, 2.0) == pytest.approx(math.e**2 - math.e)
    assert residual_example1(0.9, 0.0) == 0.0
    with pytest.raises(DomainError):
        residual_example1(1.5, 1.0)


@given(st.floats(0.0, 1.0), st.floats(0.0, 30.0))
def test_exponential_residual_nonnegative(q, t):
    assert residual_example1(q, t) >= 0


def test_surrogate_and_supercritical():
    assert surrogate_alpha(1, 3.0) == 1.0
    assert is_supercritical(1, surrogate_alpha(1, 3.0), 3.0)
    assert not is_supercritical(1, 2, 3)


def test_sample_points_cover_ball():
    t, r = sample_points(3, 1000, rng=np.random.default_rng(0))
    assert t.min() == 0 and t.max() == 10
    assert r.min() == 0 and r.max() == 20
    # uniform in volume: the median radius of a 3-ball sits at R / 2^(1/3)
    assert np.median(r) == pytest.approx(20 / 2 ** (1 / 3), rel=0.05)
