import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oswap import limits, lpp


def brute_passage_time(weights):
    """Maximum over all monotone lattice paths, by explicit enumeration."""
    rows, cols = weights.shape
    best = -np.inf
    steps = rows + cols - 2
    for downs in itertools.combinations(range(steps), rows - 1):
        i = j = 0
        total = weights[0, 0]
        for s in range(steps):
            if s in downs:
                i += 1
            else:
                j += 1
            total += weights[i, j]
        best = max(best, total)
    return best


def test_single_cell():
    w = lpp.lpp_weights(1, 1, 5, 0)
    assert lpp.lpp_time(1, 1, 5, 0) == pytest.approx(w[0, 0])


def test_all_ones_hook():
    ones = np.ones((6, 9))
    assert lpp.lpp_time(6, 9, 0, 0, weights=ones) == pytest.approx(6 + 9 - 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 1000))
def test_dp_matches_brute_enumeration(rows, cols, seed):
    w = lpp.lpp_weights(rows, cols, seed, 0)
    assert lpp.lpp_time(rows, cols, seed, 0) == pytest.approx(brute_passage_time(w))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 500))
def test_rolling_matches_full_grid(rows, cols, seed):
    grid = lpp.LppGrid.from_key(rows, cols, seed, 3)
    assert lpp.lpp_time(rows, cols, seed, 3) == pytest.approx(grid.time)


def test_grid_monotone_along_axes():
    grid = lpp.LppGrid.from_key(12, 8, 7, 0)
    g = grid.passage
    assert np.all(np.diff(g, axis=0) >= 0)
    assert np.all(np.diff(g, axis=1) >= 0)
    # local recursion holds everywhere
    for i in range(12):
        for j in range(8):
            up = g[i - 1, j] if i else 0.0
            left = g[i, j - 1] if j else 0.0
            assert g[i, j] == pytest.approx(max(up, left) + grid.weights[i, j])


def test_deterministic_and_transpose():
    a = lpp.LppGrid.from_key(10, 6, 11, 2)
    b = lpp.LppGrid.from_key(10, 6, 11, 2)
    assert np.array_equal(a.passage, b.passage)
    t = a.transpose()
    assert np.allclose(t.passage, a.passage.T)
    assert t.time == pytest.approx(a.time)


def test_replicates_are_independent_keys():
    gs = lpp.lpp_times(5, 5, 1, 4)
    assert np.unique(gs).size == 4


def test_grid_shape_and_scaling():
    rows, cols = lpp.grid_shape(0.5, 2000)
    assert (rows, cols) == (1000, 1000)
    assert lpp.grid_shape(0.3, 1000) == (700, 300)
    with pytest.raises(ValueError):
        lpp.grid_shape(0.0001, 10)
    sc = limits.tw_scaling(0.5, 2000)
    assert lpp.johansson_scaled(sc.center, 0.5, 2000) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        lpp.johansson_scaled(100.0, 0.5, 2000, rows=999, cols=1000)
    with pytest.raises(ValueError):
        lpp.johansson_scaled(100.0, 0.5, 2000, rows=1000, cols=999)


def test_transpose_swaps_label_fraction():
    # a transposed weight array realizes the y <-> 1-y grid with equal value
    y, n = 0.3, 40
    rows, cols = lpp.grid_shape(y, n)
    w = lpp.lpp_weights(rows, cols, 9, 0)
    g = lpp.lpp_time(rows, cols, 9, 0, weights=w)
    gt = lpp.lpp_time(cols, rows, 9, 0, weights=w.T)
    assert g == pytest.approx(gt)
    assert lpp.johansson_scaled(g, y, n, rows=rows, cols=cols) == pytest.approx(
        lpp.johansson_scaled(gt, 1.0 - y, n, rows=cols, cols=rows)
    )


def test_mean_passage_time_square():
    # 1000 x 1000 grid: G / cols concentrates near 4
    gs = lpp.lpp_times(1000, 1000, 31, 200)
    assert abs(float(np.mean(gs) / 1000) - 4.0) < 0.05


def test_dimension_validation():
    with pytest.raises(ValueError):
        lpp.lpp_time(0, 5, 1, 0)
    with pytest.raises(ValueError):
        lpp.lpp_time(2, 2, 1, 0, weights=np.ones((3, 3)))
    with pytest.raises(ValueError):
        lpp.LppGrid.from_weights(-np.ones((2, 2)))
