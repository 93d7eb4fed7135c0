"""Closed-form limiting objects of the oriented swap process.

Everything here is a pure function: the rarefaction-fan density, trajectory
envelopes and the limiting random trajectory, the limiting
permutation-matrix measure (CDF and sampler), the hydrodynamic density and
its cumulative, the scaled-inversion curve, and the Tracy-Widom centering
and scale for finishing-time fluctuations.

Piecewise boundaries are assigned to the left-closed branch throughout; all
quantities are continuous across them, so the choice is observationally
irrelevant (and asserted by tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def rost_profile(x):
    """Rarefaction-fan density: 1 for x < -1, (1-x)/2 on [-1, 1], 0 beyond."""
    x = np.asarray(x, dtype=np.float64)
    out = np.clip((1.0 - x) / 2.0, 0.0, 1.0)
    return out if out.ndim else float(out)


def envelope_lower(y, s):
    """Lower trajectory envelope y + s - 2*sqrt(s*y)."""
    y, s = np.asarray(y, dtype=float), np.asarray(s, dtype=float)
    out = y + s - 2.0 * np.sqrt(s * y)
    return out if out.ndim else float(out)


def envelope_upper(y, s):
    """Upper trajectory envelope y - s + 2*sqrt(s*(1-y))."""
    y, s = np.asarray(y, dtype=float), np.asarray(s, dtype=float)
    out = y - s + 2.0 * np.sqrt(s * (1.0 - y))
    return out if out.ndim else float(out)


def finishing_time_limit(y):
    """Scaled finishing time gamma_y = 1 + 2*sqrt(y*(1-y)) of label fraction y."""
    y = np.asarray(y, dtype=float)
    out = 1.0 + 2.0 * np.sqrt(y * (1.0 - y))
    return out if out.ndim else float(out)


def envelopes(y, s):
    """(lower, upper, gamma_y) for label fraction y at scaled time s."""
    _check_unit("y", y)
    _check_nonneg("s", s)
    return envelope_lower(y, s), envelope_upper(y, s), finishing_time_limit(y)


def phi(y, s, u):
    """Limiting scaled trajectory: clamp of y + u*s between the envelopes.

    For s >= gamma_y the particle has finished and sits at 1 - y.  ``u`` is
    the realized initial speed, a point of Uniform[-1, 1].
    """
    _check_unit("y", y)
    _check_nonneg("s", s)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < -1.0) or np.any(u_arr > 1.0):
        raise ValueError("u must lie in [-1, 1]")
    y_arr, s_arr = np.broadcast_arrays(
        np.asarray(y, dtype=float), np.asarray(s, dtype=float)
    )
    y_arr, s_arr, u_arr = np.broadcast_arrays(y_arr, s_arr, u_arr)
    gam = finishing_time_limit(y_arr)
    lo = envelope_lower(y_arr, s_arr)
    hi = envelope_upper(y_arr, s_arr)
    moving = np.clip(y_arr + u_arr * s_arr, lo, hi)
    out = np.where(s_arr >= gam, 1.0 - y_arr, moving)
    return out if out.ndim else float(out)


def phi_cdf(y, s, x):
    """CDF of the law of phi(y, s, U) with U ~ Uniform[-1, 1].

    Mixed law: uniform with density 1/(2s) between the envelopes plus atoms
    at each envelope where the clamp bites; a point mass at 1 - y once
    s >= gamma_y.
    """
    _check_unit("y", y)
    _check_nonneg("s", s)
    x = np.asarray(x, dtype=float)
    gam = finishing_time_limit(y)
    if s >= gam:
        out = np.where(x >= 1.0 - y, 1.0, 0.0)
        return out if out.ndim else float(out)
    if s == 0.0:
        out = np.where(x >= y, 1.0, 0.0)
        return out if out.ndim else float(out)
    lo = envelope_lower(y, s)
    hi = envelope_upper(y, s)
    raw = np.clip((x - y + s) / (2.0 * s), 0.0, 1.0)
    out = np.where(x < lo, 0.0, np.where(x >= hi, 1.0, raw))
    return out if out.ndim else float(out)


def lambda_pm(y, s):
    """(Lambda-, Lambda+): cutoff and push-back fronts of the coupled TASEP.

    Lambda- is 0 until s = y then follows the lower envelope; Lambda+ is 1
    until s = 1 - y then follows the upper envelope.  They cross exactly at
    s = gamma_y.
    """
    _check_unit("y", y)
    _check_nonneg("s", s)
    y_arr, s_arr = np.broadcast_arrays(np.asarray(y, float), np.asarray(s, float))
    lam_minus = np.where(s_arr < y_arr, 0.0, envelope_lower(y_arr, s_arr))
    lam_plus = np.where(s_arr < 1.0 - y_arr, 1.0, envelope_upper(y_arr, s_arr))
    if lam_minus.ndim:
        return lam_minus, lam_plus
    return float(lam_minus), float(lam_plus)


def psi(y, s):
    """Limit of the scaled particle count beyond the right interval edge.

    0 until s = 1 - y, then (s + y - 1)^2 / (4 s).
    """
    _check_unit("y", y)
    _check_nonneg("s", s)
    y_arr, s_arr = np.broadcast_arrays(np.asarray(y, float), np.asarray(s, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (s_arr + y_arr - 1.0) ** 2 / (4.0 * s_arr)
    out = np.where(s_arr < 1.0 - y_arr, 0.0, val)
    out = np.where(s_arr == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def z_profile(y, s, x):
    """Density profile of the cut-off process: 0 left of Lambda-, fan right."""
    _check_unit("y", y)
    _check_nonneg("s", s)
    lam_minus, _ = lambda_pm(y, s)
    x_arr = np.asarray(x, dtype=float)
    if s == 0:
        fan = np.where(x_arr < y, 1.0, 0.0)
    else:
        fan = rost_profile((x_arr - y) / s)
    out = np.where(x_arr < lam_minus, 0.0, fan)
    return out if out.ndim else float(out)


def _fan_tail(a):
    """Integral of the fan density over (a, infinity) in fan coordinates."""
    a = np.asarray(a, dtype=float)
    return np.where(a <= -1.0, -a, np.where(a >= 1.0, 0.0, (1.0 - a) ** 2 / 4.0))


def _cumulative_F_low(s, u, y):
    # explicit case tables, valid for y <= 1/2; u already clipped to [0, 1]
    if s == 0.0:
        return float(np.clip(y - u, 0.0, 1.0))
    gam = finishing_time_limit(y)
    lo = envelope_lower(y, s)
    hi = envelope_upper(y, s)
    if s <= y:
        if u <= y - s:
            return y - u
        if u <= y + s:
            return (s + y - u) ** 2 / (4.0 * s)
        return 0.0
    if s <= 1.0 - y:
        if u <= lo:
            return y
        if u <= y + s:
            return (s + y - u) ** 2 / (4.0 * s)
        return 0.0
    if s <= gam:
        if u <= lo:
            return y
        if u <= hi:
            return (s + y - u) ** 2 / (4.0 * s)
        return 1.0 - u
    if u <= 1.0 - y:
        return y
    return 1.0 - u


def cumulative_F(s, u, y):
    """Limiting mass of labels <= y at scaled positions > u.

    Equals the fan tail integral capped at y and (1-u)+.  Implemented from
    the explicit case tables for y <= 1/2; the y > 1/2 half follows from the
    left-right / label-complement symmetry of the process:
    F(s, u, y) = y - u + F(s, 1-u, 1-y).
    """
    _check_nonneg("s", s)
    _check_unit("y", y)
    s = float(s)
    y = float(y)
    u = float(np.clip(u, 0.0, 1.0))
    if y <= 0.5:
        return _cumulative_F_low(s, u, y)
    return (y - u) + _cumulative_F_low(s, 1.0 - u, 1.0 - y)


def density_f(s, x, y):
    """Limiting density of labels <= y at scaled position x (time s > 0)."""
    if s <= 0:
        raise ValueError("s must be > 0")
    _check_unit("y", y)
    x = float(x)
    lo = envelope_lower(y, s)
    hi = envelope_upper(y, s)
    band_lo = max(y - s, lo)
    band_hi = min(y + s, hi)
    if band_lo <= x < band_hi:
        return (s + y - x) / (2.0 * s)
    if 0.0 <= x < y - s:
        return 1.0
    if s > 1.0 - y and max(1.0 - y, hi) <= x <= 1.0:
        return 1.0
    if s > y and 0.0 <= x < min(1.0 - y, lo):
        return 0.0
    if y + s <= x <= 1.0:
        return 0.0
    # boundary points between pieces: left-closed assignment
    if x == band_hi:
        return (s + y - x) / (2.0 * s)
    return 0.0


def kappa_cdf(s, x, y):
    """CDF of the limiting permutation-matrix measure on [0,1]^2.

    Mass of scaled positions <= x holding labels <= y; equals
    F(s, 0, y) - F(s, x, y) = y - F(s, x, y).
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.ndim or ys.ndim:
        xs_b, ys_b = np.broadcast_arrays(xs, ys)
        out = np.empty(xs_b.shape, dtype=float)
        flat_x, flat_y = xs_b.ravel(), ys_b.ravel()
        res = out.ravel()
        for i in range(flat_x.size):
            res[i] = flat_y[i] - cumulative_F(s, flat_x[i], flat_y[i])
        return out
    return float(y) - cumulative_F(s, float(x), float(y))


def kappa_sample(s, rng, size=None):
    """Sample (x, y) points from the limiting measure.

    Draw the label fraction y uniformly and x uniformly in [y-s, y+s], then
    clamp x into the envelope interval; past the crossing time (s > 1 with
    the envelopes out of order) the point collapses onto the antidiagonal.
    ``rng`` is any numpy Generator; the sampler owns no randomness.
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    m = 1 if size is None else int(size)
    y = rng.uniform(0.0, 1.0, m)
    x = y + s * rng.uniform(-1.0, 1.0, m)
    lo = envelope_lower(y, s)
    hi = envelope_upper(y, s)
    x = np.where(lo <= hi, np.clip(x, np.minimum(lo, hi), np.maximum(lo, hi)), 1.0 - y)
    if size is None:
        return float(x[0]), float(y[0])
    return x, y


def w_pm(s):
    """Antidiagonal end fractions (1 -+ sqrt(2s - s^2))/2 for 1 < s <= 2.

    Inverse of the finishing-time curve: gamma_{W(s)} = s on [1, 2].
    """
    s = float(s)
    if not 1.0 < s <= 2.0:
        raise ValueError("w_pm requires 1 < s <= 2")
    r = math.sqrt(2.0 * s - s * s)
    return (1.0 - r) / 2.0, (1.0 + r) / 2.0


def kappa_support_contains(s, x, y, atol=1e-9):
    """True iff (x, y) lies in the support of the limiting measure."""
    if not (0.0 - atol <= x <= 1.0 + atol and 0.0 - atol <= y <= 1.0 + atol):
        return False
    gam = finishing_time_limit(y)
    if s > gam:
        return abs(x - (1.0 - y)) <= atol
    lo = envelope_lower(y, s)
    hi = envelope_upper(y, s)
    return lo - atol <= x <= hi + atol and y - s - atol <= x <= y + s + atol


def southeast_prob(s, z, atol=1e-9):
    """Mass of points strictly south-east of z = (x, y) under the limit law.

    (y - x + s)^2 / (4 s) while the antidiagonal has not formed at height y;
    exactly y once it has (s > 1 and y outside the antidiagonal gap).
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    x, y = float(z[0]), float(z[1])
    if not kappa_support_contains(s, x, y, atol=atol):
        raise ValueError(f"point {z!r} is not in the support at s={s}")
    if s > 1.0:
        wlo, whi = w_pm(min(s, 2.0)) if s <= 2.0 else (0.5, 0.5)
        if not (wlo <= y <= whi):
            return y
    return (y - x + s) ** 2 / (4.0 * s)


def inversion_limit(s):
    """Limiting scaled inversion number at scaled time s.

    2s/3 - s^2/15 on [0, 1]; 1 - (2/15) s^{-1/2} (2-s)^{3/2} (2s+1) on
    [1, 2]; 1 beyond.  Both middle expressions meet at 3/5 for s = 1.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be >= 0")
    low = 2.0 * s_arr / 3.0 - s_arr**2 / 15.0
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = 1.0 - (2.0 / 15.0) * s_arr**-0.5 * np.clip(2.0 - s_arr, 0.0, None) ** 1.5 * (2.0 * s_arr + 1.0)
    out = np.where(s_arr < 1.0, low, np.where(s_arr < 2.0, mid, 1.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TwScaling:
    """Centering and scale for finishing-time fluctuations."""

    center: float
    scale: float


def tw_scaling(y, n):
    """Tracy-Widom centering gamma_y * n and scale for label fraction y.

    Rejected at y in {0, 1}: the first (and last) particle is a plain
    rate-1 random walk with a Gamma(n-1, 1) finishing time and a Gaussian
    limit instead.
    """
    y = float(y)
    if not 0.0 < y < 1.0:
        raise ValueError("tw_scaling requires y strictly inside (0, 1)")
    gam = finishing_time_limit(y)
    scale = gam ** (2.0 / 3.0) * (y * (1.0 - y)) ** (-1.0 / 6.0) * float(n) ** (1.0 / 3.0)
    return TwScaling(center=gam * float(n), scale=scale)


def adaptive_quad(f, a, b, tol=1e-10, max_depth=48):
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adsimp(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _adsimp(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adsimp(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + _adsimp(
        f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1
    )


def quad_with_breaks(f, a, b, breaks=(), tol=1e-10):
    """Adaptive quadrature splitting at interior breakpoints."""
    pts = sorted({float(a), float(b), *(float(p) for p in breaks if a < p < b)})
    return sum(adaptive_quad(f, lo, hi, tol=tol) for lo, hi in zip(pts[:-1], pts[1:]))


def _check_unit(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")


def _check_nonneg(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ValueError(f"{name} must be >= 0")
