import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fujita_lab import capacity as cap
from fujita_lab.coefficients import CoefficientField
from fujita_lab.errors import CoverageError, DomainError, ResolutionError
from fujita_lab.exact import admissible_params, eval_u
from fujita_lab.grid import GridFunction, RadialGrid
from fujita_lab.solver import InitialData, SolverConfig, run

CFG8 = cap.CutoffConfig.for_radius(8.0, 2.0, 2.0)


def test_psi_profile():
    s = np.linspace(0, 2, 2001)
    p = cap.psi(s)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(p[s <= 0.5] == 1) and np.all(p[s >= 1] == 0)
    assert np.all(np.diff(p) <= 0)


def test_psi_prime_sup():
    # quintic smoothstep 1 - y^3(10 - 15y + 6y^2) with y = 2s - 1: |dpsi/ds| peaks at 2 * 15/8
    s = np.linspace(0.5, 1.0, 100001)
    assert np.max(np.abs(cap.psi_prime(s))) == pytest.approx(cap.PSI_PRIME_SUP, rel=1e-9)
    h = 1e-6
    fd = (cap.psi(s[1:-1] + h) - cap.psi(s[1:-1] - h)) / (2 * h)
    np.testing.assert_allclose(cap.psi_prime(s[1:-1]), fd, atol=1e-6)


def test_zeta_reference_points():
    T, R = CFG8.T, CFG8.R
    assert cap.zeta(CFG8, 0.0, 0.0) == 1.0
    assert cap.zeta(CFG8, 2 * T, 3.0) == 0.0
    assert cap.zeta(CFG8, T / 2, R / 2) == 1.0


def test_zeta_rejects_negative_time():
    with pytest.raises(DomainError):
        cap.zeta(CFG8, -1.0, 0.0)


@given(st.floats(0, 200), st.floats(0, 20))
def test_zeta_in_unit_interval(t, r):
    assert 0.0 <= cap.zeta(CFG8, t, r) <= 1.0


def test_zeta_lipschitz_on_fine_grid():
    t = np.linspace(0, CFG8.T, 2001)
    r = np.linspace(0, CFG8.R, 2001)
    c7 = cap.profile_constant()
    T, R = np.meshgrid(t, r, indexing="ij")
    z = cap.zeta(CFG8, T, R)
    assert np.max(np.abs(np.diff(z, axis=0))) <= c7 / CFG8.T * (t[1] - t[0]) * (1 + 1e-9)
    assert np.max(np.abs(np.diff(z, axis=1))) <= c7 / CFG8.R * (r[1] - r[0]) * (1 + 1e-9)


def test_derivatives_match_finite_differences():
    t = np.linspace(1.0, 70.0, 50)
    r = np.linspace(0.5, 7.5, 50)
    h = 1e-5
    np.testing.assert_allclose(cap.zeta_t(CFG8, t, r),
                               (cap.zeta(CFG8, t + h, r) - cap.zeta(CFG8, t - h, r)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(cap.zeta_r(CFG8, t, r),
                               (cap.zeta(CFG8, t, r + h) - cap.zeta(CFG8, t, r - h)) / (2 * h), atol=1e-8)


def test_eta_limits():
    assert np.all(cap.eta(CFG8, np.linspace(0, 100, 11)) == 1)
    assert np.all(cap.eta_prime(CFG8, np.linspace(0, 100, 11)) == 0)
    cfg = cap.CutoffConfig(64.0, 8.0, 6.0, 0.1, tau=1.0)
    assert cap.eta(cfg, 0.5) == 0 and cap.eta(cfg, 2.5) == 1
    # shrinking tau leaves the zeta bounds untouched
    assert cap.derivative_bounds(cfg) == cap.derivative_bounds(CFG8)


def test_derivative_bounds_below_profile_constant():
    c7 = cap.profile_constant()
    assert c7 == pytest.approx(9.2171, abs=1e-3)
    for R in (8, 16, 32, 64, 128):
        bt, bx = cap.derivative_bounds(cap.CutoffConfig.for_radius(R, 2.0, 2.0))
        assert bt == pytest.approx(cap.PSI_PRIME_SUP, rel=1e-6)
        assert bx <= c7 * (1 + 1e-9)


def test_gradient_halves_when_radius_doubles():
    R = np.array([8.0, 16.0, 32.0, 64.0])
    sup = [cap.derivative_bounds(cap.CutoffConfig.for_radius(r, 2.0, 2.0))[1] / r for r in R]
    assert np.polyfit(np.log(R), np.log(sup), 1)[0] == pytest.approx(-1.0, rel=0.01)


def test_scaling_exponents_examples():
    assert cap.scaling_exponents(1, 2, Fraction(3), Fraction(1, 10))[0] == 0.0
    assert cap.scaling_exponents(1, 2, 2, 0.1)[0] == -1.0
    assert cap.scaling_exponents(2, 1, Fraction(3, 2), Fraction(1, 10)) == (0.0, 0.0)


@given(st.integers(1, 4), st.floats(0.1, 4.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_subcritical_exponents_negative(n, alpha, frac, nu_frac):
    q = 1 + frac * alpha / n
    nu = nu_frac * min(1.0, q - 1)
    e1, e2 = cap.scaling_exponents(n, alpha, q, nu)
    assert e1 < 0 and e2 < 0


@given(st.floats(1.01, 6.0))
def test_holder_exponent_consistency(q):
    nu = cap.default_nu(q)
    d = cap.holder_d(q, nu)
    assert d > 1
    assert d * (1 + nu) == pytest.approx(q, rel=1e-15)
    assert cap.default_s(q, nu) >= 2 * (q - nu) / (q - 1) + 2


def test_cutoff_config_validation():
    with pytest.raises(DomainError):
        cap.CutoffConfig.for_radius(8, 2.0, 1.2, nu=0.5)
    with pytest.raises(DomainError):
        cap.CutoffConfig.for_radius(8, 2.0, 2.0, s=2.0)
    with pytest.raises(DomainError):
        cap.CutoffConfig(1.0, 1.0, 6.0, 1.5)


def test_capacity_integrals_reference_slope_critical():
    f = CoefficientField.power(2.0)
    rows = [cap.capacity_integrals(cap.CutoffConfig.for_radius(R, 2.0, 3.0), f, 3.0)
            for R in (8.0, 16.0, 32.0, 64.0)]
    j = np.array([row.J_time for row in rows])
    assert np.max(j) / np.min(j) - 1 < 0.05


def test_capacity_integrals_flat_region_vanishes():
    cfg = cap.CutoffConfig.for_radius(8.0, 2.0, 2.0)
    row = cap.capacity_integrals(cfg, CoefficientField.power(2.0), 2.0,
                                 window=(cfg.T / 2, cfg.R / 2))
    assert row.J_time == 0 and row.J_space_d == 0 and row.J_space_qnu == 0


def test_degenerate_field_kills_gradient_terms():
    row = cap.capacity_integrals(CFG8, CoefficientField.constant(0.0), 2.0)
    assert row.J_space_d == 0 and row.J_space_qnu == 0 and row.J_time > 0


def test_capacity_integrals_checks():
    f = CoefficientField.power(2.0)
    with pytest.raises(DomainError):
        cap.capacity_integrals(cap.CutoffConfig(10.0, 8.0, 6.0, 0.1), f, 2.0)
    with pytest.raises(ResolutionError):
        cap.capacity_integrals(CFG8, f, 2.0, nt=5, nr=5)


def test_report_needs_three_radii():
    with pytest.raises(DomainError, match="need >= 3 radii"):
        cap.capacity_report(CoefficientField.power(2.0), 2.0, [8.0])


def test_slope_tolerance():
    assert cap.slope_ok(-1.04, -1.0) and not cap.slope_ok(-1.06, -1.0)
    assert cap.slope_ok(0.04, 0.0) and not cap.slope_ok(0.06, 0.0)


# -- certificate ---------------------------------------------------------------


def constant_w(value, R=8.0, nodes=201):
    cfg = cap.CutoffConfig.for_radius(R, 2.0, 2.0)
    grid = RadialGrid.uniform(1, R, nodes)
    return GridFunction(grid, np.linspace(0, cfg.T, nodes), np.full((nodes, nodes), value)), cfg


def test_certificate_zero_w():
    w, cfg = constant_w(0.0)
    out = cap.certificate(w, CoefficientField.power(2.0), 2.0, cfg)
    assert out.lhs == 0 and out.verdict and out.ratio == 1.0


def test_c8_calibration_reproduces_constant():
    assert cap.calibrate_c8() == pytest.approx(cap.C8, rel=1e-12)
    w, cfg = constant_w(1.0, nodes=801)
    assert cap.certificate(w, CoefficientField.power(2.0), 2.0, cfg).ratio == pytest.approx(1.0)


def test_certificate_input_checks():
    w, cfg = constant_w(1.0)
    with pytest.raises(DomainError):
        cap.certificate(w.like(-w.values), CoefficientField.power(2.0), 2.0, cfg)
    big = cap.CutoffConfig.for_radius(16.0, 2.0, 2.0)
    with pytest.raises(CoverageError):
        cap.certificate(w, CoefficientField.power(2.0), 2.0, big)


def test_certificate_ratio_falls_for_subcritical_run():
    field = CoefficientField.power(2.0)
    cfg = SolverConfig(field, 2.5, r_max=64.0, nodes=257, t_end=1024.0, dt_max=0.5, frames=2049,
                       init=InitialData("gaussian", 0.05, 1.0))
    res = run(cfg)
    assert res.outcome == "GlobalUpToHorizon"
    ratios = [cap.certificate(res.frames, field, 2.5, cap.CutoffConfig.for_radius(R, 2.0, 2.5)).ratio
              for R in (8.0, 16.0, 32.0)]
    assert ratios[0] > ratios[1] > ratios[2]


def test_certificate_on_supercritical_exact_solution_reports():
    # the exponents are positive here, nothing is asserted about the ratio
    p = admissible_params(1, 2.0, 4.0).params()
    field = CoefficientField.power(2.0)
    for R in (8.0, 16.0):
        cfg = cap.CutoffConfig.for_radius(R, 2.0, 4.0)
        grid = RadialGrid.uniform(1, R, 201)
        w = GridFunction.from_function(grid, np.linspace(0, cfg.T, 201), lambda t, r: eval_u(p, t, r))
        out = cap.certificate(w, field, 4.0, cfg)
        assert out.e1 > 0 and math.isfinite(out.ratio)


# -- weak form -------------------------------------------------------------------


def exact_fields(n_t=201, n_r=201):
    p = admissible_params(1, 2.0, 4.0).params()
    grid = RadialGrid.uniform(1, 10.0, n_r)
    u = GridFunction.from_function(grid, np.linspace(0, 4.0, n_t), lambda t, r: eval_u(p, t, r))
    return p, u


def test_weak_residual_identical_and_zero_phi():
    p, u = exact_fields()
    field = CoefficientField.power(2.0)
    assert cap.weak_residual(u, u, u.like(np.zeros_like(u.values)), field, 4.0) == 0.0
    assert cap.weak_residual(u, u.like(-u.values), u.like(np.zeros_like(u.values)), field, 4.0) == 0.0


def test_weak_residual_requires_compact_phi():
    p, u = exact_fields(41, 41)
    with pytest.raises(CoverageError):
        cap.weak_residual(u, u.like(-u.values), u.like(np.ones_like(u.values)),
                          CoefficientField.power(2.0), 4.0)


def test_weak_residual_nonnegative_for_bumps():
    p, u = exact_fields()
    v = u.like(-u.values)
    T, R = u.mesh
    field = CoefficientField.power(2.0)
    tol = 1e-8 * cap.mesh_factor(u)
    rng = np.random.default_rng(5)
    for _ in range(5):
        phi = u.like(cap.bump(T, R, rng.uniform(1, 3), rng.uniform(0, 6), 0.9, rng.uniform(1, 3.5)))
        assert cap.weak_residual(u, v, phi, field, 4.0) >= -tol
