"""Limit formulas: closed-form values, independent quadrature oracles,
asymptotic slopes, and the renewal solver."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from agelab import analytic

mpmath.mp.dps = 30


# ---------------------------------------------------------------- h(theta)

def test_same_site_normalization():
    for alpha in (0.3, 0.5, 0.8):
        assert abs(analytic.same_site_aging(0.0, alpha) - 1.0) < 1e-8


def test_same_site_symmetric_point():
    assert abs(analytic.same_site_aging(1.0, 0.5) - 0.5) < 1e-8


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("theta", [0.05, 0.4, 1.0, 3.0, 25.0])
def test_same_site_is_incomplete_beta(alpha, theta):
    """Independent high-precision oracle: the regularized incomplete beta
    I_{1/(1+theta)}(alpha, 1-alpha)."""
    got = analytic.same_site_aging(theta, alpha)
    want = mpmath.betainc(alpha, 1.0 - alpha, 0, 1.0 / (1.0 + theta),
                          regularized=True)
    assert abs(got - float(want)) < 1e-9


def test_same_site_monotone():
    thetas = np.geomspace(0.01, 100, 25)
    vals = [analytic.same_site_aging(t, 0.4) for t in thetas]
    assert all(b < a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- H(theta)

def test_no_jump_normalization():
    for alpha in (0.3, 0.5, 0.8):
        assert abs(analytic.no_jump_aging(0.0, alpha) - 1.0) < 1e-8


@pytest.mark.parametrize("theta", [0.03, 0.3, 1.0, 4.0, 40.0])
def test_no_jump_half_closed_form(theta):
    want = (2.0 / math.pi) * math.atan(theta ** -0.5)
    assert abs(analytic.no_jump_aging(theta, 0.5) - want) < 1e-9


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("theta", [0.02, 0.9, 1.0, 5.0])
def test_no_jump_is_arctan_like_integral(alpha, theta):
    """Oracle: (sin(pi a)/pi) * integral_theta^inf x^(-a)/(1+x) dx."""
    want = mpmath.sin(mpmath.pi * alpha) / mpmath.pi * mpmath.quad(
        lambda x: x ** (-alpha) / (1.0 + x), [theta, 1.0, mpmath.inf]
        if theta < 1.0 else [theta, mpmath.inf])
    assert abs(analytic.no_jump_aging(theta, alpha) - float(want)) < 1e-9


def test_no_jump_complement_identity_and_precision():
    for alpha in (0.3, 0.6):
        for theta in (1e-8, 1e-4, 0.5, 2.0):
            h1 = analytic.no_jump_aging(theta, alpha)
            c1 = analytic.no_jump_aging_complement(theta, alpha)
            assert abs((1.0 - h1) - c1) < 1e-8
    # near zero the complement keeps relative precision: ~ c * theta^(1-a)
    a = 0.4
    small = analytic.no_jump_aging_complement(1e-10, a)
    c = math.sin(math.pi * a) / (math.pi * (1.0 - a))
    assert small == pytest.approx(c * (1e-10) ** (1.0 - a), rel=1e-6)


def test_no_jump_asymptotic_slopes():
    """Log-log slopes 1-alpha (small theta, complement) and -alpha (large)."""
    for alpha in (0.3, 0.5, 0.8):
        lo = np.geomspace(1e-6, 1e-4, 5)
        s_lo = np.polyfit(np.log(lo),
                          np.log([analytic.no_jump_aging_complement(t, alpha)
                                  for t in lo]), 1)[0]
        hi = np.geomspace(1e4, 1e6, 5)
        s_hi = np.polyfit(np.log(hi),
                          np.log([analytic.no_jump_aging(t, alpha)
                                  for t in hi]), 1)[0]
        assert abs(s_lo - (1.0 - alpha)) < 0.02
        assert abs(s_hi + alpha) < 0.02


# ------------------------------------------------------- limiting wait law

def test_limit_wait_cdf_at_zero():
    assert analytic.limit_wait_cdf(0.0, 0.5) == 0.0


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("t", [0.01, 0.5, 3.0, 200.0])
def test_limit_wait_cdf_against_gamma_form(alpha, t):
    """Quadrature route vs the closed incomplete-gamma form, checked with
    a third, high-precision evaluation."""
    got = analytic.limit_wait_cdf(t, alpha)
    surv = alpha * mpmath.gamma(alpha) * mpmath.power(t, -alpha) \
        * mpmath.gammainc(alpha, 0, t, regularized=True)
    assert abs((1.0 - got) - float(surv)) < 1e-8
    dense = analytic._survival_dense(np.array([t]), alpha)[0]
    assert abs(dense - float(surv)) < 1e-10


def test_limit_wait_density_integrates_to_cdf():
    alpha = 0.5
    grid = np.linspace(0.0, 5.0, 20001)
    dens = analytic.limit_wait_density(grid, alpha)
    cdf = np.trapezoid(dens, grid)
    assert cdf == pytest.approx(analytic.limit_wait_cdf(5.0, alpha),
                                abs=2e-5)


def test_limit_wait_tail_is_heavy():
    alpha = 0.4
    c = alpha * math.gamma(alpha)
    for t in (1e3, 1e5):
        surv = 1.0 - analytic.limit_wait_cdf(t, alpha)
        assert surv == pytest.approx(c * t ** (-alpha), rel=1e-3)


# ---------------------------------------------------------- renewal solver

def test_renewal_solution_identity_residual():
    """The returned density satisfies u = f + f*u on the grid."""
    alpha, step, t_max = 0.5, 0.01, 30.0
    sol = analytic.solve_renewal(alpha, t_max, step)
    grid = np.arange(len(sol.density)) * step
    f = analytic.limit_wait_density(grid, alpha)
    u = sol.density
    for j in (10, 150, 1500, 3000):
        conv = step * (0.5 * f[j] * u[0] + 0.5 * f[0] * u[j]
                       + float(np.dot(f[j - 1:0:-1], u[1:j])))
        assert u[j] == pytest.approx(f[j] + conv, rel=1e-9)


def test_renewal_no_jump_at_zero_lag_is_one():
    sol = analytic.solve_renewal(0.5, 200.0, 0.05)
    assert sol.diagnostic([0.0, 1.0, 50.0, 200.0]) < 5e-4


def test_renewal_approaches_no_jump_limit():
    sol = analytic.solve_renewal(0.5, 500.0, 0.05)
    t_w = 500.0
    for theta in (0.3, 1.0, 3.0):
        got = sol.no_jump(t_w, theta * t_w)
        want = analytic.no_jump_aging(theta, 0.5)
        assert got == pytest.approx(want, rel=0.03)


def test_renewal_against_direct_simulation():
    """Monte Carlo renewal process with waits drawn from the limiting law
    by numeric inversion — an independent check of the solver."""
    alpha, t_w, theta = 0.5, 50.0, 1.0
    sol = analytic.solve_renewal(alpha, t_w, 0.025)
    grid = np.geomspace(1e-6, 1e7, 4001)
    cdf = 1.0 - analytic._survival_dense(grid, alpha)
    rng = np.random.default_rng(1234)
    n = 40000
    horizon = t_w * (1.0 + theta)
    no_jump = 0
    for _ in range(n):
        t = 0.0
        while True:
            u = rng.random()
            w = float(np.interp(u, cdf, grid))
            t += w
            if t > t_w:
                no_jump += t > horizon
                break
    p = no_jump / n
    se = math.sqrt(p * (1 - p) / n)
    want = sol.no_jump(t_w, theta * t_w)
    assert abs(p - want) < 3.5 * se


def test_renewal_grid_validation():
    sol = analytic.solve_renewal(0.5, 10.0, 0.1)
    with pytest.raises(ValueError):
        sol.no_jump(0.55, 1.0)  # off-grid t_w
    with pytest.raises(ValueError):
        sol.no_jump(11.0, 1.0)  # outside solved range
    with pytest.raises(ValueError):
        analytic.solve_renewal(0.5, 10.0, -0.1)
    with pytest.raises(ValueError):
        analytic.solve_renewal(0.5, 10.0, 9.0)  # mass per cell too big


# ------------------------------------------------------------- sub-aging

def test_subaging_exponent_values():
    assert analytic.subaging_exponent(0.0, 0.5) == pytest.approx(2 / 3)
    assert analytic.subaging_exponent(0.5, 0.5) == pytest.approx(1 / 3)
    assert analytic.subaging_exponent(1.0, 0.7) == 0.0


def test_subaging_constant_closed_forms():
    for alpha in (0.3, 0.5, 0.9):
        assert analytic.subaging_constant(0.0, alpha) == pytest.approx(
            0.5, abs=1e-10)
        assert analytic.subaging_constant(1.0, alpha) == pytest.approx(
            1.0, abs=1e-10)
    assert analytic.subaging_constant(0.5, 0.5) == pytest.approx(
        1.0 / math.sqrt(6.0), abs=1e-10)


@pytest.mark.parametrize("a,alpha,lam", [(0.3, 0.5, 0.7), (0.8, 0.4, 2.0)])
def test_depth_power_laplace_oracle(a, alpha, lam):
    got = analytic.depth_power_laplace(lam, a, alpha)
    want = mpmath.quad(lambda y: mpmath.e ** (-lam * y ** (-a / alpha)),
                       [0, 1])
    assert abs(got - float(want)) < 1e-8


def test_depth_power_laplace_a_zero():
    assert analytic.depth_power_laplace(1.3, 0.0, 0.5) == pytest.approx(
        math.exp(-1.3), abs=1e-12)


def _table_from(us, fs):
    return analytic.WeightCdf(np.asarray(us, float), np.asarray(fs, float))


def test_weight_cdf_validation():
    with pytest.raises(ValueError):
        _table_from([1.0, 1.0], [0.5, 1.0])
    with pytest.raises(ValueError):
        _table_from([1.0, 2.0], [0.8, 0.5])
    with pytest.raises(ValueError):
        _table_from([1.0], [1.2])


def test_weight_cdf_step_semantics():
    t = _table_from([1.0, 2.0, 4.0], [0.2, 0.7, 1.0])
    np.testing.assert_allclose(t.at([0.5, 1.0, 1.5, 2.0, 4.0, 9.0]),
                               [0.0, 0.2, 0.2, 0.7, 1.0, 1.0])
    assert t.masses().sum() == pytest.approx(1.0)


@st_.composite
def weight_tables(draw):
    n = draw(st_.integers(min_value=1, max_value=8))
    us = sorted(draw(st_.lists(
        st_.floats(min_value=1e-3, max_value=1e3), min_size=n, max_size=n,
        unique=True)))
    import numpy as _np
    if len(set(_np.float64(u) for u in us)) < len(us):
        us = [10.0 ** k for k in range(len(us))]
    raw = draw(st_.lists(st_.floats(min_value=1e-6, max_value=1.0),
                         min_size=n, max_size=n))
    fs = _np.cumsum(raw)
    fs = fs / fs[-1]
    return _table_from(us, fs)


@given(weight_tables(),
       st_.floats(min_value=0.0, max_value=50.0),
       st_.sampled_from([0.3, 0.5, 0.8]))
@settings(max_examples=40, deadline=None)
def test_general_route_equals_direct_route_at_a0(table, theta, alpha):
    """The a = 0 specialization of the general limit equals the direct
    exponential mixture for any weight table."""
    general = analytic.subaging_limit(theta, 0.0, alpha, table)
    direct = analytic.subaging_limit_direct(theta, table)
    assert abs(general - direct) <= 1e-10


def test_subaging_limit_normalization_and_decay():
    table = _table_from([0.5, 1.0, 3.0], [0.3, 0.6, 1.0])
    for a, alpha in ((0.0, 0.5), (0.4, 0.3), (1.0, 0.8)):
        assert analytic.subaging_limit(0.0, a, alpha, table) == pytest.approx(
            1.0, abs=1e-10)
        vals = [analytic.subaging_limit(th, a, alpha, table)
                for th in (0.1, 1.0, 10.0, 100.0)]
        assert all(b < a_ for a_, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.2


def test_rejects_bad_alpha():
    for bad in (0.0, 1.0, -0.3, 2.0):
        with pytest.raises(ValueError):
            analytic.no_jump_aging(1.0, bad)
        with pytest.raises(ValueError):
            analytic.solve_renewal(bad, 10.0, 0.1)
