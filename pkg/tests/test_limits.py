import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oswap import limits


def test_rost_profile_cases():
    assert limits.rost_profile(-2.0) == 1.0
    assert limits.rost_profile(0.0) == 0.5
    assert limits.rost_profile(3.0) == 0.0
    xs = np.linspace(-2, 2, 41)
    vals = limits.rost_profile(xs)
    assert np.all(np.diff(vals) <= 0)


def test_envelopes_examples():
    _, _, gam = limits.envelopes(0.5, 1.0)
    assert gam == pytest.approx(2.0, abs=1e-15)
    lo, hi, _ = limits.envelopes(0.25, 1.0)
    assert lo == pytest.approx(0.25, abs=1e-12)
    assert hi == pytest.approx(-0.75 + math.sqrt(3.0), abs=1e-12)
    lo, _, gam = limits.envelopes(0.0, 0.7)
    assert lo == pytest.approx(0.7)
    assert gam == pytest.approx(1.0)


def test_envelopes_domain():
    with pytest.raises(ValueError):
        limits.envelopes(-0.1, 1.0)
    with pytest.raises(ValueError):
        limits.envelopes(0.5, -1.0)


def test_phi_examples():
    for y in (0.1, 0.5, 0.8):
        gam = limits.finishing_time_limit(y)
        for u in (-1.0, 0.0, 0.7):
            assert limits.phi(y, gam + 0.5, u) == pytest.approx(1.0 - y)
    assert limits.phi(0.25, 0.5, 1.0) == pytest.approx(0.75, abs=1e-12)
    assert limits.phi(0.25, 0.5, -1.0) == pytest.approx(0.75 - 2.0 * math.sqrt(0.125), abs=1e-12)
    with pytest.raises(ValueError):
        limits.phi(0.25, 0.5, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(-1.0, 1.0))
def test_phi_continuous_at_finishing_time(y, u):
    gam = limits.finishing_time_limit(y)
    below = limits.phi(y, gam - 1e-9, u)
    at = limits.phi(y, gam, u)
    assert at == pytest.approx(1.0 - y, abs=1e-12)
    assert below == pytest.approx(at, abs=1e-6)


def test_phi_cdf_mixed_law():
    y, s = 0.3, 0.8
    lo, hi, _ = limits.envelopes(y, s)
    assert limits.phi_cdf(y, s, lo - 1e-9) == 0.0
    # atom at the lower envelope
    mass_lo = (lo - (y - s)) / (2 * s)
    assert limits.phi_cdf(y, s, lo) == pytest.approx(mass_lo)
    assert limits.phi_cdf(y, s, hi) == 1.0
    gam = limits.finishing_time_limit(y)
    assert limits.phi_cdf(y, gam + 1.0, 1.0 - y) == 1.0
    assert limits.phi_cdf(y, gam + 1.0, 1.0 - y - 1e-9) == 0.0


def test_lambda_examples():
    lm, _ = limits.lambda_pm(0.3, 0.2)
    assert lm == 0.0
    _, lp = limits.lambda_pm(0.3, 0.5)
    assert lp == 1.0
    y = 0.3
    gam = limits.finishing_time_limit(y)
    lm, lp = limits.lambda_pm(y, gam)
    assert lm == pytest.approx(1.0 - y, abs=1e-12)
    assert lp == pytest.approx(1.0 - y, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 3.0))
def test_lambda_order_switches_at_gamma(y, s):
    lm, lp = limits.lambda_pm(y, s)
    gam = limits.finishing_time_limit(y)
    if s <= gam:
        assert lm <= lp + 1e-12
    else:
        assert lm > lp - 1e-12


def fan_tail_reference(s, u, y):
    """Direct evaluation: min(tail integral of the fan, y, (1-u)+)."""
    if s == 0:
        tail = max(y - u, 0.0)
    else:
        a = (u - y) / s
        if a <= -1:
            tail = y - u
        elif a >= 1:
            tail = 0.0
        else:
            tail = s * (1.0 - a) ** 2 / 4.0
    return min(tail, y, max(1.0 - u, 0.0))


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-0.5, 1.5), st.floats(0.0, 1.0))
def test_cumulative_F_matches_direct_formula(s, u, y):
    table = limits.cumulative_F(s, u, y)
    direct = fan_tail_reference(s, float(np.clip(u, 0.0, 1.0)), y)
    assert table == pytest.approx(direct, abs=1e-12)


def test_cumulative_F_examples():
    for s in (0.2, 0.7, 1.4, 2.5):
        for y in (0.0, 0.3, 0.5, 0.9, 1.0):
            assert limits.cumulative_F(s, 0.0, y) == pytest.approx(y, abs=1e-12)
            assert limits.cumulative_F(s, 1.0, y) == pytest.approx(0.0, abs=1e-12)
    # psi value at the right edge: (s + y - 1)^2 / (4 s)
    assert limits.psi(0.5, 2.0) == pytest.approx(0.28125, abs=1e-12)
    assert limits.cumulative_F(2.0, 1.0 - 1e-12, 0.5) == pytest.approx(0.0, abs=1e-9)


def test_density_examples():
    assert limits.density_f(0.2, 0.05, 0.5) == 1.0  # 0 < x < y - s
    assert limits.density_f(0.2, 0.9, 0.5) == 0.0   # y + s < x < 1
    y, s = 0.3, 0.1
    x = 0.3  # inside the fan band
    assert limits.density_f(s, x, y) == pytest.approx((s + y - x) / (2 * s))
    with pytest.raises(ValueError):
        limits.density_f(0.0, 0.5, 0.5)


@pytest.mark.parametrize("s", [0.3, 0.8, 1.2, 1.9])
@pytest.mark.parametrize("y", [0.15, 0.5, 0.85])
def test_density_integrates_to_cumulative(s, y):
    lo, hi, _ = limits.envelopes(y, s)
    breaks = [y - s, y + s, lo, hi, 1.0 - y]
    for u in (0.0, 0.25, 0.55, 0.9):
        val = limits.quad_with_breaks(
            lambda x: limits.density_f(s, x, y), u, 1.0, breaks=breaks, tol=1e-11
        )
        assert val == pytest.approx(limits.cumulative_F(s, u, y), abs=1e-8)


def test_kappa_cdf_examples():
    for s in (0.4, 1.0, 1.7):
        assert limits.kappa_cdf(s, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    for x in (0.0, 0.3, 0.8, 1.0):
        for y in (0.0, 0.45, 1.0):
            assert limits.kappa_cdf(2.0, x, y) == pytest.approx(max(x + y - 1.0, 0.0), abs=1e-12)
            assert limits.kappa_cdf(3.7, x, y) == pytest.approx(max(x + y - 1.0, 0.0), abs=1e-12)


@pytest.mark.parametrize("s", [0.3, 0.9, 1.4])
def test_kappa_cdf_monotone_and_symmetric(s):
    grid = np.linspace(0.0, 1.0, 21)
    vals = limits.kappa_cdf(s, grid[:, None], grid[None, :])
    assert np.all(np.diff(vals, axis=0) >= -1e-12)
    assert np.all(np.diff(vals, axis=1) >= -1e-12)
    assert np.allclose(vals, vals.T, atol=1e-12)  # (x,y) -> (y,x)
    # (x,y) -> (1-x, 1-y): mass of the complement box via inclusion-exclusion
    comp = 1.0 - grid[:, None] - grid[None, :] + vals
    assert np.allclose(vals, comp[::-1, ::-1].T * 0 + comp[::-1, ::-1], atol=1e-12)


def test_kappa_sampler_matches_cdf():
    rng = np.random.default_rng(4)
    s = 0.8
    xs, ys = limits.kappa_sample(s, rng, size=200_000)
    for x0, y0 in [(0.3, 0.4), (0.5, 0.5), (0.8, 0.9), (0.2, 0.9)]:
        mc = np.mean((xs <= x0) & (ys <= y0))
        assert mc == pytest.approx(limits.kappa_cdf(s, x0, y0), abs=0.005)


def test_kappa_sampler_scalar_mode():
    rng = np.random.default_rng(0)
    x, y = limits.kappa_sample(1.5, rng)
    assert limits.kappa_support_contains(1.5, x, y)


def test_w_pm_examples():
    assert limits.w_pm(2.0) == pytest.approx((0.5, 0.5), abs=1e-15)
    wm, wp = limits.w_pm(1.0 + 1e-9)
    assert wm == pytest.approx(0.0, abs=1e-4)
    assert wp == pytest.approx(1.0, abs=1e-4)
    wm, wp = limits.w_pm(1.5)
    assert wm == pytest.approx(0.0669872981, abs=1e-9)
    assert limits.finishing_time_limit(wm) == pytest.approx(1.5, abs=1e-12)
    assert limits.finishing_time_limit(wp) == pytest.approx(1.5, abs=1e-12)
    for bad in (0.5, 1.0, 2.2):
        with pytest.raises(ValueError):
            limits.w_pm(bad)


def test_southeast_examples():
    assert limits.southeast_prob(0.5, (0.3, 0.3)) == pytest.approx(0.125, abs=1e-12)
    y0 = 0.05  # below the antidiagonal gap at s = 1.5
    assert limits.southeast_prob(1.5, (1.0 - y0, y0)) == pytest.approx(y0, abs=1e-12)
    with pytest.raises(ValueError):
        limits.southeast_prob(0.5, (0.9, 0.05))  # off support


def test_southeast_matches_sampler():
    rng = np.random.default_rng(9)
    s = 1.3
    xs, ys = limits.kappa_sample(s, rng, size=150_000)
    for z in [(0.4, 0.45), (0.62, 0.7)]:
        mc = np.mean((xs > z[0]) & (ys < z[1]))
        assert limits.southeast_prob(s, z) == pytest.approx(mc, abs=0.01)


def test_inversion_limit_branches():
    low = 2.0 / 3.0 - 1.0 / 15.0
    high = 1.0 - (2.0 / 15.0) * (1.0) * (2.0 + 1.0)
    assert low == pytest.approx(high, abs=1e-15)
    assert limits.inversion_limit(1.0) == pytest.approx(0.6, abs=1e-12)
    assert limits.inversion_limit(0.5) == pytest.approx(19.0 / 60.0, abs=1e-12)
    assert limits.inversion_limit(2.0) == 1.0
    assert limits.inversion_limit(5.0) == 1.0
    assert limits.inversion_limit(0.0) == 0.0
    with pytest.raises(ValueError):
        limits.inversion_limit(-0.5)


def test_inversion_limit_continuity_and_monotonicity():
    s = np.linspace(0.0, 2.5, 2501)
    vals = limits.inversion_limit(s)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.max(np.abs(np.diff(vals))) < 2e-3  # no jumps across branch points


def test_tw_scaling():
    sc = limits.tw_scaling(0.5, 1000)
    assert sc.center == pytest.approx(2000.0)
    assert sc.scale == pytest.approx(20.0, abs=1e-9)
    for y in (0.2, 0.35):
        a = limits.tw_scaling(y, 500)
        b = limits.tw_scaling(1.0 - y, 500)
        assert a.scale == pytest.approx(b.scale, rel=1e-12)
        assert a.center == pytest.approx(b.center, rel=1e-12)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            limits.tw_scaling(bad, 100)


def test_psi_piecewise():
    assert limits.psi(0.3, 0.5) == 0.0
    assert limits.psi(0.3, 1.0) == pytest.approx(0.3**2 / 4.0)
    ys = np.linspace(0.01, 0.99, 23)
    for y in ys:
        gam = limits.finishing_time_limit(y)
        assert limits.psi(y, gam) <= y + 1e-12


@pytest.mark.parametrize("y,s", [(0.3, 0.9), (0.5, 1.2), (0.7, 0.4), (0.2, 1.8)])
def test_z_profile_mass(y, s):
    lam_minus, _ = limits.lambda_pm(y, s)
    val = limits.quad_with_breaks(
        lambda x: limits.z_profile(y, s, x),
        lam_minus, y + s + 0.5,
        breaks=[y - s, y + s, lam_minus + 1e-12], tol=1e-11,
    )
    assert val == pytest.approx(y, abs=1e-8)


def test_adaptive_quad_known_integral():
    assert limits.adaptive_quad(np.sin, 0.0, np.pi, tol=1e-12) == pytest.approx(2.0, abs=1e-10)
    assert limits.adaptive_quad(lambda x: x * x, 0.0, 3.0) == pytest.approx(9.0, abs=1e-10)
