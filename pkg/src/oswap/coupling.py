"""Pathwise coupling checks between the swap process and its TASEP family.

One shared clock family drives, simultaneously: the labeled swap process on
[1, n], the finite-interval TASEPs with marks <= k and <= k-1, and the
infinite step-initial TASEP with marks <= k on a certified window.  The
replay verifies, at every event time,

  * the projection identity: marks <= k of the labeled process equal the
    finite TASEP configuration,
  * the reduction identity: the finite TASEP equals the infinite one after
    cut-off and push-back (checked through the queue-length form),
  * the discrepancy identification: particle k's location equals the unique
    site where the <=k and <=k-1 finite TASEPs differ.

Each event changes only O(1) state entries, so per-event local checks plus
periodic full-state audits verify the identities exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .clocks import MASK64, merged_rings
from .tasep import WindowPolicy

OK = 0
FAIL_PROJECTION = 1
FAIL_REDUCTION = 2
FAIL_DISCREPANCY = 3
FAIL_AUDIT = 4

_FAIL_NAMES = {
    OK: "ok",
    FAIL_PROJECTION: "projection identity",
    FAIL_REDUCTION: "cutoff/pushback reduction",
    FAIL_DISCREPANCY: "second-class identification",
    FAIL_AUDIT: "full-state audit",
}


@njit(cache=True, nogil=True)
def _coupling_kernel(times, bonds, n, k, win_lo, win_hi, check_every):
    nsites_w = win_hi - win_lo + 1
    fwd = np.empty(n, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        fwd[i] = i + 1
        pos[i] = i + 1
    fk = np.empty(n, dtype=np.int8)    # finite TASEP, marks <= k, site x -> x-1
    fk1 = np.empty(n, dtype=np.int8)   # marks <= k-1
    for x in range(1, n + 1):
        fk[x - 1] = 1 if x <= k else 0
        fk1[x - 1] = 1 if x <= k - 1 else 0
    wk = np.empty(nsites_w, dtype=np.int8)  # infinite process on the window
    for i in range(nsites_w):
        wk[i] = 1 if win_lo + i <= k else 0
    s_fin = np.empty(n + 1, dtype=np.int64)   # S(fk, x), x = 0..n
    s_win = np.empty(n + 1, dtype=np.int64)   # S(wk, x), x = 0..n
    for x in range(n + 1):
        s_fin[x] = k - x if x < k else 0
        s_win[x] = k - x if x < k else 0
    X = k
    min_changed = win_hi + 10
    max_changed = win_lo - 10
    nev = times.shape[0]
    for e in range(nev):
        m = bonds[e]
        finite_bond = 1 <= m <= n - 1
        if finite_bond:
            a = fwd[m - 1]
            b = fwd[m]
            if a < b:
                fwd[m - 1] = b
                fwd[m] = a
                pos[a - 1] = m + 1
                pos[b - 1] = m
            if fk[m - 1] == 1 and fk[m] == 0:
                fk[m - 1] = 0
                fk[m] = 1
                s_fin[m] += 1
            if fk1[m - 1] == 1 and fk1[m] == 0:
                fk1[m - 1] = 0
                fk1[m] = 1
            # discrepancy can only sit at m, m+1, or stay
            if fk[X - 1] != 1 or fk1[X - 1] != 0:
                if fk[m - 1] == 1 and fk1[m - 1] == 0:
                    X = m
                elif fk[m] == 1 and fk1[m] == 0:
                    X = m + 1
                else:
                    return FAIL_DISCREPANCY, e, min_changed, max_changed
        if win_lo <= m <= win_hi - 1:
            i = m - win_lo
            if wk[i] == 1 and wk[i + 1] == 0:
                wk[i] = 0
                wk[i + 1] = 1
                if m < min_changed:
                    min_changed = m
                if m + 1 > max_changed:
                    max_changed = m + 1
                if 0 <= m <= n:
                    s_win[m] += 1
        # local checks at the touched entries
        if finite_bond:
            for x in (m, m + 1):
                want = 1 if fwd[x - 1] <= k else 0
                if fk[x - 1] != want:
                    return FAIL_PROJECTION, e, min_changed, max_changed
                want1 = 1 if fwd[x - 1] <= k - 1 else 0
                if fk1[x - 1] != want1:
                    return FAIL_PROJECTION, e, min_changed, max_changed
            if pos[k - 1] != X:
                return FAIL_DISCREPANCY, e, min_changed, max_changed
        if 0 <= m <= n:
            clip = s_win[m]
            if clip > k:
                clip = k
            if clip > n - m:
                clip = n - m
            if s_fin[m] != clip:
                return FAIL_REDUCTION, e, min_changed, max_changed
        if (e + 1) % check_every == 0 or e == nev - 1:
            code = _full_audit(fwd, fk, fk1, wk, s_fin, s_win, n, k, win_lo, X)
            if code != OK:
                return code, e, min_changed, max_changed
    return OK, nev, min_changed, max_changed


@njit(cache=True, inline="always")
def _full_audit(fwd, fk, fk1, wk, s_fin, s_win, n, k, win_lo, X):
    # projection and discrepancy over every site
    diffs = 0
    for x in range(1, n + 1):
        if fk[x - 1] != (1 if fwd[x - 1] <= k else 0):
            return FAIL_AUDIT
        if fk1[x - 1] != (1 if fwd[x - 1] <= k - 1 else 0):
            return FAIL_AUDIT
        if fk[x - 1] != fk1[x - 1]:
            diffs += 1
            if x != X or fk[x - 1] != 1:
                return FAIL_AUDIT
    if diffs != 1:
        return FAIL_AUDIT
    # S(fk, x) recomputed from scratch: particles strictly right of x
    run = 0
    for x in range(n, -1, -1):
        if x < n:
            run += fk[x]  # fk index x holds site x+1
        if s_fin[x] != run:
            return FAIL_AUDIT
    # S(wk, x) from the window occupancy, walking the suffix leftward
    wend = win_lo + wk.shape[0] - 1
    run = 0
    for site in range(wend, n, -1):
        run += wk[site - win_lo]
    for x in range(n, -1, -1):
        if s_win[x] != run:
            return FAIL_AUDIT
        run += wk[x - win_lo]  # site x joins the suffix as x decreases
    return OK


@dataclass(frozen=True)
class CouplingReport:
    n: int
    k: int
    horizon: float
    seed: int
    replicate: int
    events: int
    ok: bool
    failure: str
    window_lo: int
    window_hi: int


def coupling_check(n, k, horizon, seed, replicate=0, check_every=1024,
                   policy=WindowPolicy()):
    """Replay one shared-clock realization and verify all three identities.

    The window margin follows the same certified policy as the infinite
    TASEP simulator; the merged event stream covers every window bond, so
    the identities are checked at every event time of the construction.
    """
    n, k = int(n), int(k)
    if not 1 <= k <= n - 1:
        raise ValueError("k must lie in 1..n-1")
    margin = policy.initial_margin(horizon)
    win_lo = min(k - margin, -1)
    win_hi = max(k + margin, n + 1)
    times, bonds = merged_rings(seed, replicate, win_lo, win_hi - 1, horizon)
    code, events, min_ch, max_ch = _coupling_kernel(
        times, bonds, n, k, win_lo, win_hi, int(check_every)
    )
    ok = code == OK
    failure = _FAIL_NAMES[int(code)]
    if ok and not (min_ch > win_lo + policy.guard and max_ch < win_hi - policy.guard):
        ok = False
        failure = "window certificate"
    return CouplingReport(
        n=n, k=k, horizon=float(horizon), seed=int(seed), replicate=int(replicate),
        events=int(events), ok=ok, failure=failure,
        window_lo=win_lo, window_hi=win_hi,
    )
