"""Directed last-passage percolation with Exponential(1) weights.

Independent distributional oracle for finishing-time fluctuations: the
passage time over an (n-k) x k grid has the law of the time at which the
k-th rightmost particle of a step-initial TASEP completes its (n-k)-th
jump, which brackets the finishing time of particle k in the swap process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import limits
from .clocks import DOMAIN_LPP, MASK64, U64, exp_gap, philox4


@njit(cache=True, nogil=True)
def _lpp_rolling(rows, cols, seed, replicate):
    """Passage time G(rows, cols) with O(cols) memory, row-major DP fill.

    Weights are lanes of the keyed counter stream in row-major order, so the
    full weight matrix never needs to exist.
    """
    k0 = U64(seed)
    k1 = U64(DOMAIN_LPP)
    c3 = U64(replicate)
    g = np.empty(cols, dtype=np.float64)
    flat = 0
    for i in range(rows):
        left = 0.0
        for j in range(cols):
            x0, x1, x2, x3 = philox4(U64(flat // 4), U64(0), U64(0), c3, k0, k1)
            lane = flat % 4
            if lane == 0:
                x = x0
            elif lane == 1:
                x = x1
            elif lane == 2:
                x = x2
            else:
                x = x3
            w = exp_gap(x)
            flat += 1
            up = g[j] if i > 0 else 0.0
            best = left if left > up else up
            left = best + w
            g[j] = left
    return g[cols - 1]


@njit(cache=True, nogil=True)
def _lpp_fill(weights):
    rows, cols = weights.shape
    g = np.empty((rows, cols), dtype=np.float64)
    for i in range(rows):
        for j in range(cols):
            up = g[i - 1, j] if i > 0 else 0.0
            left = g[i, j - 1] if j > 0 else 0.0
            best = up if up > left else left
            g[i, j] = best + weights[i, j]
    return g


def lpp_weights(rows, cols, seed, replicate):
    """The (rows x cols) Exponential(1) weight matrix of one replicate."""
    out = np.empty(rows * cols, dtype=np.float64)
    _fill_weights(out, int(seed) & MASK64, int(replicate))
    return out.reshape(rows, cols)


@njit(cache=True, nogil=True)
def _fill_weights(out, seed, replicate):
    k0 = U64(seed)
    k1 = U64(DOMAIN_LPP)
    c3 = U64(replicate)
    for flat in range(out.shape[0]):
        x0, x1, x2, x3 = philox4(U64(flat // 4), U64(0), U64(0), c3, k0, k1)
        lane = flat % 4
        if lane == 0:
            x = x0
        elif lane == 1:
            x = x1
        elif lane == 2:
            x = x2
        else:
            x = x3
        out[flat] = exp_gap(x)


@dataclass
class LppGrid:
    """Explicit weight and passage-time matrices (small-scale / test use)."""

    rows: int
    cols: int
    weights: np.ndarray
    passage: np.ndarray

    @classmethod
    def from_key(cls, rows, cols, seed, replicate):
        w = lpp_weights(rows, cols, seed, replicate)
        return cls.from_weights(w)

    @classmethod
    def from_weights(cls, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("weights must be a non-empty 2-d array")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        return cls(rows=w.shape[0], cols=w.shape[1], weights=w, passage=_lpp_fill(w))

    @property
    def time(self):
        return float(self.passage[-1, -1])

    def transpose(self):
        return LppGrid.from_weights(self.weights.T)


def lpp_time(rows, cols, seed, replicate, weights=None):
    """Passage time G(rows, cols); ``weights`` overrides the keyed stream."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (rows, cols):
            raise ValueError("weights shape mismatch")
        return float(_lpp_fill(w)[-1, -1])
    return float(_lpp_rolling(int(rows), int(cols), int(seed) & MASK64, int(replicate)))


def lpp_times(rows, cols, seed, replicates):
    """Passage times for replicates 0..replicates-1 (replicate-keyed)."""
    out = np.empty(int(replicates), dtype=np.float64)
    for r in range(int(replicates)):
        out[r] = _lpp_rolling(int(rows), int(cols), int(seed) & MASK64, r)
    return out


def grid_shape(y, n):
    """(rows, cols) = (n - k, k) for label fraction y of system size n."""
    k = int(round(y * n))
    if not 0 < k < n:
        raise ValueError("y*n must be strictly inside (0, n)")
    return n - k, k


def johansson_scaled(g, y, n, rows=None, cols=None):
    """Standardize a passage time: (g - gamma_y * n) / tw_scale(y, n).

    If grid dimensions are supplied they must match the (n-k, k) map.
    """
    exp_rows, exp_cols = grid_shape(y, n)
    if rows is not None and int(rows) != exp_rows:
        raise ValueError(f"rows {rows} inconsistent with y={y}, n={n} (expect {exp_rows})")
    if cols is not None and int(cols) != exp_cols:
        raise ValueError(f"cols {cols} inconsistent with y={y}, n={n} (expect {exp_cols})")
    sc = limits.tw_scaling(y, n)
    return (np.asarray(g, dtype=float) - sc.center) / sc.scale
