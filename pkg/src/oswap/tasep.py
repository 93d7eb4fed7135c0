"""Step-initial TASEPs coupled to the swap process, and their operator algebra.

Configurations live in the space of 0/1 assignments on the integers with a
rightmost particle.  A configuration is stored as an optional solid left ray
(every site <= solid_to occupied) plus an explicit window; the cut-off,
push-back, jump, and projection operators act by value.

Infinite-lattice processes run on a finite window with a runtime
certificate: if any occupancy change touches a guard band at the window
edge, the replicate is rerun with the margin doubled.  Ring times are keyed
per bond, so enlargement replays all previously used rings exactly.  Bonds
whose neighborhood is still frozen at its initial value are not scheduled
(their early rings are provably no-ops), which keeps the event count
proportional to the causal cone rather than the window size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .clocks import DOMAIN_CLOCKS, MASK64, U64, exp_gap, merged_rings, philox4, zigzag

GUARD = 2


# ---------------------------------------------------------------------------
# configurations


class BinaryConfig:
    """0/1 configuration with a rightmost particle (optionally a solid ray).

    solid_to: every site <= solid_to is occupied (None for finitely many
    particles).  window: explicit occupancy on [win_start, win_start+len).
    Outside the ray and the window every site is empty.
    """

    __slots__ = ("solid_to", "win_start", "window", "_pasc")

    def __init__(self, solid_to, win_start, window):
        window = np.asarray(window, dtype=np.int8)
        if solid_to is not None:
            win_start = solid_to + 1
        solid_to, win_start, window = _normalize(solid_to, win_start, window)
        self.solid_to = solid_to
        self.win_start = int(win_start)
        self.window = window
        self._pasc = self.win_start + np.flatnonzero(window == 1)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_particles(cls, sites):
        """Finite configuration holding exactly the given particle sites."""
        sites = sorted(set(int(s) for s in sites))
        if not sites:
            return cls(None, 0, np.empty(0, dtype=np.int8))
        lo, hi = sites[0], sites[-1]
        win = np.zeros(hi - lo + 1, dtype=np.int8)
        for s in sites:
            win[s - lo] = 1
        return cls(None, lo, win)

    @classmethod
    def step(cls, k):
        """The step configuration: every site <= k occupied."""
        return cls(int(k), int(k) + 1, np.empty(0, dtype=np.int8))

    @classmethod
    def empty(cls):
        return cls(None, 0, np.empty(0, dtype=np.int8))

    # -- basic queries ---------------------------------------------------

    @property
    def is_solid(self):
        return self.solid_to is not None

    @property
    def is_empty(self):
        return self.solid_to is None and self.window.size == 0

    def rightmost(self):
        """Position of the rightmost particle (None for the empty config)."""
        if self.window.size:
            return int(self.win_start + self.window.size - 1)
        return self.solid_to

    def window_end(self):
        return self.win_start + self.window.size - 1

    def occupied(self, x):
        x = int(x)
        if self.solid_to is not None and x <= self.solid_to:
            return True
        if self.win_start <= x <= self.window_end():
            return bool(self.window[x - self.win_start])
        return False

    def particle_count(self):
        """Number of particles (None when the solid ray makes it infinite)."""
        if self.is_solid:
            return None
        return int(self._pasc.size)

    def particles(self):
        """Explicit particle sites (finite configurations only)."""
        if self.is_solid:
            raise ValueError("configuration has infinitely many particles")
        return [int(p) for p in self._pasc]

    # -- queue-length functions ------------------------------------------

    def queue_length(self, x):
        """Number of particles strictly to the right of x."""
        x = int(x)
        s = int(self._pasc.size - np.searchsorted(self._pasc, x, side="right"))
        if self.solid_to is not None and x < self.solid_to:
            s += self.solid_to - x
        return s

    def particle_pos(self, j):
        """Position of the j-th rightmost particle (j >= 1)."""
        j = int(j)
        if j < 1:
            raise ValueError("j must be >= 1")
        w = self._pasc.size
        if j <= w:
            return int(self._pasc[w - j])
        if self.solid_to is not None:
            return int(self.solid_to - (j - w - 1))
        raise ValueError(f"configuration has fewer than {j} particles")

    def hole_pos(self, n, j):
        """Position of the j-th rightmost hole at or left of site n.

        Holes of the configuration overlaid with a solid ray on [n+1, inf);
        j = 0 returns n + 1 by convention.
        """
        n, j = int(n), int(j)
        if j < 0:
            raise ValueError("j must be >= 0")
        if j == 0:
            return n + 1
        end = self.window_end()
        gap_hi = n - max(end, self.win_start - 1)  # holes right of the window
        if gap_hi >= j:
            return n - (j - 1)
        remaining = j - max(gap_hi, 0)
        top = min(end, n)
        if top >= self.win_start:
            idx = top - self.win_start
            holes = np.flatnonzero(self.window[: idx + 1] == 0)
            if remaining <= holes.size:
                return int(self.win_start + holes[holes.size - remaining])
            remaining -= holes.size
        if self.solid_to is not None:
            raise ValueError(f"configuration has fewer than {j} holes at or below {n}")
        lo = min(self.win_start - 1, n)  # every site left of the window is a hole
        return int(lo - (remaining - 1))

    # -- equality / plumbing ---------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, BinaryConfig)
            and self.solid_to == other.solid_to
            and self.win_start == other.win_start
            and np.array_equal(self.window, other.window)
        )

    def __hash__(self):
        return hash((self.solid_to, self.win_start, self.window.tobytes()))

    def __repr__(self):
        if self.is_solid:
            return f"BinaryConfig(solid<={self.solid_to}, window={self.window.tolist()})"
        return f"BinaryConfig(particles={self.particles()})"

    def densify(self, lo, hi):
        """Occupancy array over [lo, hi]."""
        out = np.zeros(hi - lo + 1, dtype=np.int8)
        if self.solid_to is not None and self.solid_to >= lo:
            out[: min(self.solid_to, hi) - lo + 1] = 1
        for p in self._pasc:
            if lo <= p <= hi:
                out[p - lo] = 1
        return out


def _normalize(solid_to, win_start, window):
    ones = np.flatnonzero(window == 1)
    if solid_to is not None:
        lead = 0
        while lead < window.size and window[lead] == 1:
            lead += 1
        solid_to = int(solid_to) + lead
        window = window[lead:]
        ones = np.flatnonzero(window == 1)
        if ones.size == 0:
            return solid_to, solid_to + 1, np.empty(0, dtype=np.int8)
        window = window[: ones[-1] + 1]
        return solid_to, solid_to + 1, np.ascontiguousarray(window)
    if ones.size == 0:
        return None, 0, np.empty(0, dtype=np.int8)
    first, last = ones[0], ones[-1]
    return None, int(win_start + first), np.ascontiguousarray(window[first : last + 1])


# ---------------------------------------------------------------------------
# operators


def project(labels, k, start=1, identity_outside=False):
    """Mark the sites whose label is <= k.

    ``labels`` is an integer-labeled configuration on [start, start+len);
    with ``identity_outside`` the labeling continues as label = site off the
    stored interval (the infinite labeled process), otherwise sites off the
    interval are empty.
    """
    labels = np.asarray(labels, dtype=np.int64)
    flags = (labels <= k).astype(np.int8)
    end = start + labels.size - 1
    if not identity_outside:
        return BinaryConfig(None, start, flags)
    solid_to = min(int(k), start - 1)
    if k > end:
        flags = np.concatenate([flags, np.ones(int(k) - end, dtype=np.int8)])
    if solid_to < start - 1:
        flags = np.concatenate([np.zeros(start - 1 - solid_to, dtype=np.int8), flags])
    return BinaryConfig(solid_to, solid_to + 1, flags)


def cutoff(rho, k):
    """Keep only the k rightmost particles."""
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return BinaryConfig.empty()
    w = rho._pasc.size
    if not rho.is_solid:
        if k >= w:
            return rho
        return BinaryConfig.from_particles(rho._pasc[w - k :])
    if k <= w:
        return BinaryConfig.from_particles(rho._pasc[w - k :])
    d = k - w
    lo = rho.solid_to - d + 1
    sites = list(range(lo, rho.solid_to + 1)) + [int(p) for p in rho._pasc]
    return BinaryConfig.from_particles(sites)


def pushback(rho, n):
    """Push every particle into (-inf, n], preserving exclusion.

    The j-th rightmost particle at site x moves to min(x, n + 1 - j).
    """
    n = int(n)
    if rho.is_empty:
        return rho
    pos = rho._pasc
    w = pos.size
    if rho.is_solid:
        if rho.solid_to + w > n:
            # more particles than room above the ray: everything compacts
            return BinaryConfig.step(n)
        moved = [min(int(pos[w - j]), n + 1 - j) for j in range(1, w + 1)]
        win = np.zeros(max(moved) - rho.solid_to, dtype=np.int8) if moved else np.empty(0, dtype=np.int8)
        for p in moved:
            win[p - rho.solid_to - 1] = 1
        return BinaryConfig(rho.solid_to, rho.solid_to + 1, win)
    moved = [min(int(pos[w - j]), n + 1 - j) for j in range(1, w + 1)]
    return BinaryConfig.from_particles(moved)


def jump(rho, m):
    """Attempted jump at bond m: transpose (m, m+1) iff it is (1, 0)."""
    m = int(m)
    if not rho.occupied(m) or rho.occupied(m + 1):
        return rho
    if rho.is_solid and m <= rho.solid_to:
        # occupied(m+1) is False, so m is exactly the ray edge
        tail = rho.window[1:] if rho.window.size else np.empty(0, dtype=np.int8)
        arr = np.concatenate([np.array([0, 1], dtype=np.int8), tail])
        return BinaryConfig(rho.solid_to - 1, rho.solid_to, arr)
    lo = rho.win_start
    hi = max(rho.window_end(), m + 1)
    arr = rho.densify(lo, hi)
    arr[m - lo] = 0
    arr[m + 1 - lo] = 1
    return BinaryConfig(rho.solid_to, lo, arr)


def queue_length(rho, x):
    return rho.queue_length(x)


def particle_pos(rho, j):
    return rho.particle_pos(j)


def hole_pos(rho, n, j):
    return rho.hole_pos(n, j)


# ---------------------------------------------------------------------------
# compatible pairs and the second-class particle


@dataclass
class SecondClassPair:
    """Two configurations differing at exactly one site (1 above, 0 below).

    The discrepancy site behaves as a second-class particle under shared
    jumps: it advances into holes and is overtaken by real particles.
    """

    rho: BinaryConfig
    rho_prime: BinaryConfig
    discrepancy: int

    @classmethod
    def create(cls, rho, rho_prime):
        return cls(rho, rho_prime, second_class_pos(rho, rho_prime))

    def apply_jump(self, m):
        """Shared attempted jump at bond m; discrepancy moves by local rule."""
        m = int(m)
        sigma = self.discrepancy
        if sigma == m and not self.rho_prime.occupied(m + 1):
            sigma = m + 1
        elif sigma == m + 1 and self.rho_prime.occupied(m):
            sigma = m
        return SecondClassPair(jump(self.rho, m), jump(self.rho_prime, m), sigma)

    def apply_cutoff(self, k):
        """(R_k rho, R_{k-1} rho'): discrepancy joins max with the k-th particle."""
        k = int(k)
        sigma = max(self.discrepancy, self.rho.particle_pos(k))
        return SecondClassPair(cutoff(self.rho, k), cutoff(self.rho_prime, k - 1), sigma)

    def apply_pushback(self, n):
        """(B_n rho, B_n rho'): discrepancy clipped by the deepest filled hole."""
        n = int(n)
        if self.rho.is_solid:
            raise ValueError("push-back rule requires infinitely many holes on the left")
        sigma = min(self.discrepancy, self.rho.hole_pos(n, self.rho.queue_length(n)))
        return SecondClassPair(pushback(self.rho, n), pushback(self.rho_prime, n), sigma)

    def validate(self):
        actual = second_class_pos(self.rho, self.rho_prime)
        if actual != self.discrepancy:
            raise AssertionError(f"tracked discrepancy {self.discrepancy} != actual {actual}")
        return True


def second_class_pos(rho, rho_prime):
    """The unique site where rho has a particle and rho_prime a hole.

    Raises if the configurations are not compatible.
    """
    if rho.is_solid != rho_prime.is_solid:
        raise ValueError("configurations differ at infinitely many sites")
    anchors = []
    for c in (rho, rho_prime):
        if c.is_solid:
            anchors.append(c.solid_to)
        elif not c.is_empty:
            anchors.append(c.win_start)
    if not anchors:
        raise ValueError("configurations are identical (both empty)")
    lo = min(anchors) - 1
    hi = max([c.rightmost() for c in (rho, rho_prime) if c.rightmost() is not None] + [lo])
    a = rho.densify(lo, hi)
    b = rho_prime.densify(lo, hi)
    diff = np.flatnonzero(a != b)
    if diff.size != 1:
        raise ValueError(f"configurations differ at {diff.size} sites, not 1")
    if not (a[diff[0]] == 1 and b[diff[0]] == 0):
        raise ValueError("discrepancy has the wrong orientation (rho must hold the particle)")
    return int(lo + diff[0])


# ---------------------------------------------------------------------------
# windowed simulation of the infinite step-initial TASEP


@dataclass(frozen=True)
class WindowPolicy:
    """Margin policy for simulating the infinite lattice on a window."""

    guard: int = GUARD
    max_doublings: int = 6

    def initial_margin(self, horizon):
        # propagation speed <= 1 plus large-deviation slack, doubled for safety
        return int(math.ceil(2.0 * horizon) + math.ceil(10.0 * math.sqrt(horizon)) + 10)


class WindowOverflowError(RuntimeError):
    """The activity certificate failed at the maximum window size."""


@njit(cache=True, inline="always")
def _heap_push(ht, hb, size, t, b):
    i = size
    ht[i] = t
    hb[i] = b
    while i > 0:
        parent = (i - 1) // 2
        if ht[parent] > ht[i] or (ht[parent] == ht[i] and hb[parent] > hb[i]):
            ht[parent], ht[i] = ht[i], ht[parent]
            hb[parent], hb[i] = hb[i], hb[parent]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, inline="always")
def _heap_pop(ht, hb, size):
    t = ht[0]
    b = hb[0]
    size -= 1
    ht[0] = ht[size]
    hb[0] = hb[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        small = i
        if l < size and (ht[l] < ht[small] or (ht[l] == ht[small] and hb[l] < hb[small])):
            small = l
        if r < size and (ht[r] < ht[small] or (ht[r] == ht[small] and hb[r] < hb[small])):
            small = r
        if small == i:
            break
        ht[small], ht[i] = ht[i], ht[small]
        hb[small], hb[i] = hb[i], hb[small]
        i = small
    return t, b, size


@njit(cache=True, inline="always")
def _gen_bond(seed, replicate, bond, horizon, rings, row):
    """Fill one bond's rings up to the horizon; count, or -1 on overflow.

    Same block layout and accumulation order as the global stream builders,
    so the produced times are bitwise identical to theirs.
    """
    c2 = zigzag(bond)
    k0 = U64(seed)
    k1 = U64(DOMAIN_CLOCKS)
    c3 = U64(replicate)
    total = 0.0
    cnt = 0
    cap = rings.shape[1]
    blk = U64(0)
    while True:
        x0, x1, x2, x3 = philox4(blk, U64(0), c2, c3, k0, k1)
        for lane in range(4):
            if lane == 0:
                x = x0
            elif lane == 1:
                x = x1
            elif lane == 2:
                x = x2
            else:
                x = x3
            total += exp_gap(x)
            if total > horizon:
                return cnt
            if cnt >= cap:
                return -1
            rings[row, cnt] = total
            cnt += 1
        blk += U64(1)


@njit(cache=True, inline="always")
def _activate(seed, replicate, bond, t, horizon, rings, rcnt, rptr, ht, hb, hsize, win_lo):
    """Schedule a bond's first ring after time t; returns (hsize, ok)."""
    bi = bond - win_lo
    c = _gen_bond(seed, replicate, bond, horizon, rings, bi)
    if c < 0:
        return hsize, False
    rcnt[bi] = c
    p = 0
    while p < c and rings[bi, p] <= t:
        p += 1
    if p < c:
        hsize = _heap_push(ht, hb, hsize, rings[bi, p], bond)
        rptr[bi] = p + 1
    else:
        rptr[bi] = p
    return hsize, True


@njit(cache=True, nogil=True)
def _tasep_window_kernel(seed, replicate, k, win_lo, win_hi, horizon,
                         snap_times, snaps, cap):
    """Step-initial TASEP on [win_lo, win_hi] with lazily activated bonds.

    Returns (final occupancy, min changed site, max changed site, overflow).
    """
    nsites = win_hi - win_lo + 1
    nbonds = nsites - 1
    occ = np.empty(nsites, dtype=np.int8)
    for i in range(nsites):
        occ[i] = 1 if win_lo + i <= k else 0
    rings = np.empty((nbonds, cap), dtype=np.float64)
    rcnt = np.full(nbonds, -2, dtype=np.int64)
    rptr = np.zeros(nbonds, dtype=np.int64)
    ht = np.empty(nbonds + 1, dtype=np.float64)
    hb = np.empty(nbonds + 1, dtype=np.int64)
    hsize = 0
    min_changed = win_hi + 10
    max_changed = win_lo - 10
    lo_site = k + 1
    hi_site = k
    overflow = False
    if k < win_lo or k > win_hi - 1:
        return occ, min_changed, max_changed, True
    hsize, ok = _activate(seed, replicate, k, 0.0, horizon, rings, rcnt, rptr,
                          ht, hb, hsize, win_lo)
    if not ok:
        overflow = True
    si = 0
    while hsize > 0 and not overflow:
        t, m, hsize = _heap_pop(ht, hb, hsize)
        while si < snap_times.shape[0] and snap_times[si] < t:
            for j in range(nsites):
                snaps[si, j] = occ[j]
            si += 1
        bi = m - win_lo
        if rptr[bi] < rcnt[bi]:
            hsize = _heap_push(ht, hb, hsize, rings[bi, rptr[bi]], m)
            rptr[bi] += 1
        if occ[bi] == 1 and occ[bi + 1] == 0:
            occ[bi] = 0
            occ[bi + 1] = 1
            if m < min_changed:
                min_changed = m
            if m + 1 > max_changed:
                max_changed = m + 1
            if m < lo_site:
                lo_site = m
                nb = m - 1
                if nb < win_lo or rcnt[nb - win_lo] != -2:
                    overflow = overflow or nb < win_lo
                else:
                    hsize, ok = _activate(seed, replicate, nb, t, horizon, rings,
                                          rcnt, rptr, ht, hb, hsize, win_lo)
                    overflow = overflow or not ok
            if m + 1 > hi_site:
                hi_site = m + 1
                nb = m + 1
                if nb > win_hi - 1 or rcnt[nb - win_lo] != -2:
                    overflow = overflow or nb > win_hi - 1
                else:
                    hsize, ok = _activate(seed, replicate, nb, t, horizon, rings,
                                          rcnt, rptr, ht, hb, hsize, win_lo)
                    overflow = overflow or not ok
    while si < snap_times.shape[0]:
        for j in range(nsites):
            snaps[si, j] = occ[j]
        si += 1
    return occ, min_changed, max_changed, overflow


@njit(cache=True, nogil=True)
def _pair_window_kernel(seed, replicate, k, win_lo, win_hi, horizon,
                        sample_times, xs_out, check_every, cap):
    """Coupled pair (step at k, step at k-1) sharing one clock family.

    Evolves the lower configuration ``occp`` plus the discrepancy site X;
    the upper configuration ``occ0`` is carried along for the periodic
    full-diff cross-check.  Returns (min_changed, max_changed, overflow,
    check_failed).
    """
    nsites = win_hi - win_lo + 1
    nbonds = nsites - 1
    occp = np.empty(nsites, dtype=np.int8)
    occ0 = np.empty(nsites, dtype=np.int8)
    for i in range(nsites):
        site = win_lo + i
        occp[i] = 1 if site <= k - 1 else 0
        occ0[i] = 1 if site <= k else 0
    X = k
    rings = np.empty((nbonds, cap), dtype=np.float64)
    rcnt = np.full(nbonds, -2, dtype=np.int64)
    rptr = np.zeros(nbonds, dtype=np.int64)
    ht = np.empty(nbonds + 1, dtype=np.float64)
    hb = np.empty(nbonds + 1, dtype=np.int64)
    hsize = 0
    min_changed = win_hi + 10
    max_changed = win_lo - 10
    lo_site = k        # leftmost hole of the lower configuration
    hi_site = k        # rightmost particle overall (the discrepancy)
    overflow = False
    check_failed = False
    if k - 1 < win_lo or k > win_hi - 1:
        return min_changed, max_changed, True, False
    for m0 in range(k - 1, k + 1):
        hsize, ok = _activate(seed, replicate, m0, 0.0, horizon, rings, rcnt,
                              rptr, ht, hb, hsize, win_lo)
        if not ok:
            overflow = True
    si = 0
    events = 0
    while hsize > 0 and not overflow:
        t, m, hsize = _heap_pop(ht, hb, hsize)
        while si < sample_times.shape[0] and sample_times[si] < t:
            xs_out[si] = X
            si += 1
        bi = m - win_lo
        if rptr[bi] < rcnt[bi]:
            hsize = _heap_push(ht, hb, hsize, rings[bi, rptr[bi]], m)
            rptr[bi] += 1
        changed = False
        if X == m:
            if occp[bi + 1] == 0:
                # second-class particle advances into a shared hole
                X = m + 1
                occ0[bi] = 0
                occ0[bi + 1] = 1
                changed = True
        elif X == m + 1:
            if occp[bi] == 1:
                # a first-class particle overtakes the discrepancy
                occp[bi] = 0
                occp[bi + 1] = 1
                X = m
                changed = True
        elif occp[bi] == 1 and occp[bi + 1] == 0:
            occp[bi] = 0
            occp[bi + 1] = 1
            occ0[bi] = 0
            occ0[bi + 1] = 1
            changed = True
        if changed:
            if m < min_changed:
                min_changed = m
            if m + 1 > max_changed:
                max_changed = m + 1
            if occp[bi] == 0 and m < lo_site:
                lo_site = m
                nb = m - 1
                if nb < win_lo:
                    overflow = True
                elif rcnt[nb - win_lo] == -2:
                    hsize, ok = _activate(seed, replicate, nb, t, horizon, rings,
                                          rcnt, rptr, ht, hb, hsize, win_lo)
                    overflow = overflow or not ok
            if m + 1 > hi_site:
                hi_site = m + 1
                nb = m + 1
                if nb > win_hi - 1:
                    overflow = True
                elif rcnt[nb - win_lo] == -2:
                    hsize, ok = _activate(seed, replicate, nb, t, horizon, rings,
                                          rcnt, rptr, ht, hb, hsize, win_lo)
                    overflow = overflow or not ok
        events += 1
        if events % check_every == 0:
            diffs = 0
            for j in range(nsites):
                if occ0[j] != occp[j]:
                    diffs += 1
                    if win_lo + j != X or occ0[j] != 1:
                        check_failed = True
            if diffs != 1:
                check_failed = True
    while si < sample_times.shape[0]:
        xs_out[si] = X
        si += 1
    diffs = 0
    for j in range(nsites):
        if occ0[j] != occp[j]:
            diffs += 1
            if win_lo + j != X or occ0[j] != 1:
                check_failed = True
    if diffs != 1:
        check_failed = True
    return min_changed, max_changed, overflow, check_failed


@njit(cache=True, nogil=True)
def _finite_tasep_replay(times, bonds, a, occ, snap_times, snaps):
    nsites = occ.shape[0]
    si = 0
    for e in range(times.shape[0]):
        t = times[e]
        while si < snap_times.shape[0] and snap_times[si] < t:
            for j in range(nsites):
                snaps[si, j] = occ[j]
            si += 1
        i = bonds[e] - a
        if occ[i] == 1 and occ[i + 1] == 0:
            occ[i] = 0
            occ[i + 1] = 1
    while si < snap_times.shape[0]:
        for j in range(nsites):
            snaps[si, j] = occ[j]
        si += 1
    return occ


@dataclass
class TasepPath:
    """One TASEP replicate: occupancy snapshots plus window provenance."""

    k: int
    horizon: float
    seed: int
    replicate: int
    window_lo: int
    window_hi: int
    infinite: bool
    snapshot_times: np.ndarray
    snapshots: np.ndarray      # (num_snapshots, window size)
    final: np.ndarray
    retries: int

    def snapshot_at(self, t, atol=1e-9):
        idx = np.flatnonzero(np.isclose(self.snapshot_times, t, rtol=0.0, atol=atol))
        if idx.size == 0:
            raise ValueError(f"no snapshot recorded at t={t}")
        return self.snapshots[int(idx[0])]

    def config_at(self, t, atol=1e-9):
        occ = self.snapshot_at(t, atol=atol).copy()
        if self.infinite:
            return BinaryConfig(self.window_lo - 1, self.window_lo, occ)
        return BinaryConfig(None, self.window_lo, occ)

    def queue_length(self, t, x):
        """Particles strictly right of x at snapshot time t."""
        occ = self.snapshot_at(t)
        x = int(math.floor(x))
        lo = self.window_lo
        if x >= self.window_hi:
            return 0
        start = max(x + 1, lo)
        s = int(occ[start - lo :].sum())
        if self.infinite and x < lo - 1:
            s += (lo - 1) - x
        return s


def simulate_tasep(k, horizon, seed, replicate=0, interval=None,
                   snapshot_times=(), policy=WindowPolicy()):
    """Step-initial TASEP (marks <= k) driven by the shared clock streams.

    ``interval=None`` simulates the infinite lattice on a certified window;
    ``interval=(a, b)`` restricts jumps to the bonds inside [a, b].
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    snap = np.asarray(sorted(snapshot_times), dtype=np.float64)
    k = int(k)
    if interval is not None:
        a, b = int(interval[0]), int(interval[1])
        if b <= a:
            raise ValueError("interval must contain at least two sites")
        times, bonds = merged_rings(seed, replicate, a, b - 1, horizon)
        occ0 = (np.arange(a, b + 1) <= k).astype(np.int8)
        snaps = np.empty((snap.size, occ0.size), dtype=np.int8)
        final = _finite_tasep_replay(times, bonds, a, occ0, snap, snaps)
        return TasepPath(k=k, horizon=float(horizon), seed=int(seed),
                         replicate=int(replicate), window_lo=a, window_hi=b,
                         infinite=False, snapshot_times=snap, snapshots=snaps,
                         final=final, retries=0)
    margin = policy.initial_margin(horizon)
    for attempt in range(policy.max_doublings + 1):
        win_lo = k - margin
        win_hi = k + margin
        cap = _bond_cap(horizon)
        snaps = np.empty((snap.size, win_hi - win_lo + 1), dtype=np.int8)
        final, min_ch, max_ch, overflow = _tasep_window_kernel(
            int(seed) & MASK64, int(replicate), k, win_lo, win_hi,
            float(horizon), snap, snaps, cap,
        )
        if not overflow and min_ch > win_lo + policy.guard and max_ch < win_hi - policy.guard:
            return TasepPath(k=k, horizon=float(horizon), seed=int(seed),
                             replicate=int(replicate), window_lo=win_lo,
                             window_hi=win_hi, infinite=True, snapshot_times=snap,
                             snapshots=snaps, final=final, retries=attempt)
        margin *= 2
    raise WindowOverflowError(
        f"activity reached the window guard after {policy.max_doublings} doublings"
    )


def second_class_trajectory(k, horizon, seed, replicate=0, sample_times=(),
                            policy=WindowPolicy(), check_every=16384):
    """Discrepancy-site samples of the coupled pair (step k, step k-1).

    Returns (sample_times, positions, retries).  The tracked site is
    cross-checked against a full configuration diff every ``check_every``
    events and once more at the end of the replay.
    """
    sample = np.asarray(sorted(sample_times), dtype=np.float64)
    k = int(k)
    margin = policy.initial_margin(horizon)
    for attempt in range(policy.max_doublings + 1):
        win_lo = k - margin
        win_hi = k + margin
        xs = np.empty(sample.size, dtype=np.int64)
        min_ch, max_ch, overflow, check_failed = _pair_window_kernel(
            int(seed) & MASK64, int(replicate), k, win_lo, win_hi,
            float(horizon), sample, xs, int(check_every), _bond_cap(horizon),
        )
        if check_failed:
            raise AssertionError("incremental discrepancy diverged from the full diff")
        if not overflow and min_ch > win_lo + policy.guard and max_ch < win_hi - policy.guard:
            return sample, xs, attempt
        margin *= 2
    raise WindowOverflowError(
        f"activity reached the window guard after {policy.max_doublings} doublings"
    )


def _bond_cap(horizon):
    return int(horizon + 12.0 * math.sqrt(horizon + 1.0) + 32.0)
