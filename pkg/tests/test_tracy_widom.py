import numpy as np
import pytest

from oswap import tracy_widom as tw


@pytest.fixture(scope="module")
def sol():
    return tw.solve_painleve()


def test_initialization_near_asymptotic(sol):
    # the true Airy value sits within half a percent of the leading term at 8
    assert sol.u[0] == pytest.approx(tw.airy_leading_asymptotic(8.0), rel=0.01)
    assert sol.grid[0] == 8.0
    assert sol.grid[-1] == pytest.approx(-10.0, abs=1e-9)


def test_solution_positive_decreasing_right(sol):
    right = sol.grid > 0
    assert np.all(sol.u[right] > 0)
    # decreasing toward +infinity: on the stored (decreasing) grid u grows
    u_right = sol.u[right]
    assert np.all(np.diff(u_right) >= 0)


def test_residual_small(sol):
    assert sol.residual() < 1e-8


def test_step_halving_u_and_cdf(sol):
    half = tw.solve_painleve(step=5e-4)
    u5 = sol.u[np.isclose(sol.grid, -5.0)][0]
    u5h = half.u[np.isclose(half.grid, -5.0)][0]
    assert abs(u5 - u5h) < 1e-6
    zs = np.linspace(-5.0, 2.0, 29)
    assert np.max(np.abs(sol.cdf(zs) - half.cdf(zs))) < 1e-6


def test_cdf_limits_and_monotonicity(sol):
    assert abs(sol.cdf(8.0) - 1.0) < 1e-6
    assert sol.cdf(-10.0) < 1e-4
    zs = np.linspace(-10.0, 8.0, 1801)
    vals = sol.cdf(zs)
    assert np.all(np.diff(vals) >= 0)
    assert np.all((vals >= 0) & (vals <= 1))


def test_cdf_out_of_range_rejected(sol):
    with pytest.raises(ValueError):
        sol.cdf(-10.5)
    with pytest.raises(ValueError):
        sol.cdf(9.0)


def test_median_dual_scheme(sol):
    med = sol.quantile(0.5)
    alt = tw.solve_painleve(scheme=tw.SCHEME_RK38, x_start=9.0, step=8e-4)
    assert abs(alt.quantile(0.5) - med) < 1e-4


def test_published_moments(sol):
    # independent anchor: high-precision GUE values from the random-matrix
    # literature: mean -1.7710868074, variance 0.8131947928
    zneg = np.linspace(-10.0, 0.0, 200001)
    zpos = np.linspace(0.0, 8.0, 160001)
    fn = sol.cdf(zneg)
    fp = sol.cdf(zpos)
    mean = np.trapezoid(1.0 - fp, zpos) - np.trapezoid(fn, zneg)
    ez2 = 2.0 * np.trapezoid(zpos * (1.0 - fp), zpos) - 2.0 * np.trapezoid(zneg * fn, zneg)
    assert mean == pytest.approx(-1.7710868074, abs=1e-6)
    assert ez2 - mean * mean == pytest.approx(0.8131947928, abs=1e-6)


def test_asymptotic_init_leaves_decaying_branch():
    # the leading-term initialization carries a 0.5% off-branch error at
    # x_start = 8; the integrated solution blows up near x = -4
    with pytest.raises(tw.PainleveBlowupError) as err:
        tw.solve_painleve(init=tw.INIT_ASYMPTOTIC)
    assert "decaying branch" in str(err.value)
    # it remains usable on a right-limited range
    sol = tw.solve_painleve(init=tw.INIT_ASYMPTOTIC, x_min=-2.0)
    assert abs(sol.cdf(0.0) - 0.9694) < 5e-3


def test_config_validation():
    with pytest.raises(ValueError):
        tw.solve_painleve(x_min=9.0)
    with pytest.raises(ValueError):
        tw.solve_painleve(step=-1e-3)
    with pytest.raises(ValueError):
        tw.solve_painleve(scheme="euler")
    with pytest.raises(ValueError):
        tw.solve_painleve(init="guess")


def test_module_level_accessors(sol):
    assert tw.f_tw(0.0) == pytest.approx(sol.cdf(0.0), abs=1e-12)
    med = tw.tw_quantile(0.5)
    assert sol.cdf(med) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        sol.quantile(1.5)


def test_tail_integral_vectorized(sol):
    zs = np.array([-3.0, 0.0, 2.0])
    vals = sol.tail_integral(zs)
    assert vals.shape == (3,)
    assert np.all(np.diff(vals) < 0)
