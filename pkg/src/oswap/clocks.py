"""Deterministic per-bond Poisson clock streams.

Every stochastic process in this package is driven by unit-rate Poisson
"ring" times attached to lattice bonds.  Rings are produced by a
counter-based generator (Philox4x64-10, bit-identical to numpy's Philox)
keyed by (master seed, domain, replicate, bond, draw index).  Because each
inter-arrival gap is a pure function of its key, a stream can be extended,
regenerated, or consumed in any order -- on any thread -- and always yields
the same times.  Enlarging a simulation window therefore reproduces all
previously used rings exactly, and coupled processes share one clock family
simply by using the same (seed, replicate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

U64 = np.uint64

_PHILOX_M0 = U64(0xD2E7470EE14C6C93)
_PHILOX_M1 = U64(0xCA5A826395121157)
_WEYL0 = U64(0x9E3779B97F4A7C15)
_WEYL1 = U64(0xBB67AE8584CAA73B)
_MASK32 = U64(0xFFFFFFFF)
_TWO53_INV = 1.0 / 9007199254740992.0

# key namespaces so unrelated draw families never overlap
DOMAIN_CLOCKS = 1
DOMAIN_LPP = 2
DOMAIN_CHAIN = 3
DOMAIN_BATCH = 4

MASK64 = (1 << 64) - 1


@njit(cache=True, inline="always")
def _mulhi(a, b):
    ah = a >> U64(32)
    al = a & _MASK32
    bh = b >> U64(32)
    bl = b & _MASK32
    lo = al * bl
    t = ah * bl + (lo >> U64(32))
    tl = (t & _MASK32) + al * bh
    return ah * bh + (t >> U64(32)) + (tl >> U64(32))


@njit(cache=True, inline="always")
def philox4(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block: 256 counter bits -> four 64-bit words."""
    x0, x1, x2, x3 = c0, c1, c2, c3
    for _ in range(10):
        hi0 = _mulhi(_PHILOX_M0, x0)
        lo0 = _PHILOX_M0 * x0
        hi1 = _mulhi(_PHILOX_M1, x2)
        lo1 = _PHILOX_M1 * x2
        x0 = hi1 ^ x1 ^ k0
        x1 = lo1
        x2 = hi0 ^ x3 ^ k1
        x3 = lo0
        k0 = k0 + _WEYL0
        k1 = k1 + _WEYL1
    return x0, x1, x2, x3


@njit(cache=True, inline="always")
def u64_to_unit(x):
    """Top 53 bits -> double in (0, 1]; never 0, so log() is safe."""
    return (float(x >> U64(11)) + 1.0) * _TWO53_INV


@njit(cache=True, inline="always")
def exp_gap(x):
    return -np.log(u64_to_unit(x))


@njit(cache=True, inline="always")
def zigzag(bond):
    if bond >= 0:
        return U64(2 * bond)
    return U64(-2 * bond - 1)


@njit(cache=True, inline="always")
def bond_gap(seed, replicate, bond_c2, idx):
    """idx-th exponential gap of one bond's stream (pure function of the key)."""
    x0, x1, x2, x3 = philox4(
        U64(idx // 4), U64(0), bond_c2, U64(replicate), U64(seed), U64(DOMAIN_CLOCKS)
    )
    lane = idx % 4
    if lane == 0:
        x = x0
    elif lane == 1:
        x = x1
    elif lane == 2:
        x = x2
    else:
        x = x3
    return exp_gap(x)


@njit(cache=True, nogil=True)
def _extend_rings(seed, replicate, bond, horizon, total, nxt, out, start):
    """Append rings in (total, horizon] to out[start:].

    ``total`` is the last emitted cumulative time and ``nxt`` the index of
    the first unconsumed gap.  Returns (count, total, nxt); count == -1
    signals that ``out`` filled up before the horizon was reached.  A gap
    that would overshoot the horizon is left unconsumed, so extending later
    re-draws it bit-for-bit.
    """
    c2 = zigzag(bond)
    cnt = start
    cap = out.shape[0]
    while True:
        g = bond_gap(seed, replicate, c2, nxt)
        if total + g > horizon:
            return cnt, total, nxt
        if cnt >= cap:
            return -1, total, nxt
        total += g
        out[cnt] = total
        cnt += 1
        nxt += 1


@njit(cache=True, nogil=True)
def rings_matrix(seed, replicate, bond_lo, nbonds, horizon, cap):
    """Ring times for ``nbonds`` consecutive bonds, row b = bond_lo + b.

    Returns (matrix, counts); counts[b] == -1 flags a capacity overflow.
    """
    out = np.empty((nbonds, cap), dtype=np.float64)
    counts = np.empty(nbonds, dtype=np.int64)
    k0 = U64(seed)
    k1 = U64(DOMAIN_CLOCKS)
    c3 = U64(replicate)
    for b in range(nbonds):
        c2 = zigzag(bond_lo + b)
        total = 0.0
        cnt = 0
        blk = U64(0)
        overflow = False
        done = False
        while not done:
            x0, x1, x2, x3 = philox4(blk, U64(0), c2, c3, k0, k1)
            g0 = exp_gap(x0)
            g1 = exp_gap(x1)
            g2 = exp_gap(x2)
            g3 = exp_gap(x3)
            t0 = total + g0
            t1 = t0 + g1
            t2 = t1 + g2
            t3 = t2 + g3
            if t3 <= horizon and cnt + 4 <= cap:
                out[b, cnt] = t0
                out[b, cnt + 1] = t1
                out[b, cnt + 2] = t2
                out[b, cnt + 3] = t3
                cnt += 4
                total = t3
            else:
                for t in (t0, t1, t2, t3):
                    if t > horizon:
                        done = True
                        break
                    if cnt >= cap:
                        overflow = True
                        done = True
                        break
                    out[b, cnt] = t
                    cnt += 1
                total = t3
            blk += U64(1)
        counts[b] = -1 if overflow else cnt
    return out, counts


@njit(cache=True, nogil=True)
def _compact(rings, counts, bond_lo):
    total = 0
    for b in range(counts.size):
        total += counts[b]
    times = np.empty(total, dtype=np.float64)
    bonds = np.empty(total, dtype=np.int64)
    p = 0
    for b in range(counts.size):
        for j in range(counts[b]):
            times[p] = rings[b, j]
            bonds[p] = bond_lo + b
            p += 1
    return times, bonds


def _ring_cap(horizon):
    # Poisson(horizon) envelope; overflow is detected and retried anyway
    return int(horizon + 12.0 * np.sqrt(horizon + 1.0) + 32.0)


def ring_times(seed, replicate, bond, horizon):
    """All ring times of one bond in [0, horizon], strictly increasing."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon == 0:
        return np.empty(0, dtype=np.float64)
    cap = _ring_cap(horizon)
    while True:
        out = np.empty(cap, dtype=np.float64)
        cnt, _, _ = _extend_rings(
            int(seed) & MASK64, int(replicate), int(bond), float(horizon), 0.0, 0, out, 0
        )
        if cnt >= 0:
            return out[:cnt].copy()
        cap *= 2


@dataclass
class ClockStream:
    """Lazily extendable Poisson ring stream for one bond.

    Extending the horizon never changes previously generated times; two
    streams with equal (master_seed, replicate_id, bond) are bitwise
    identical.
    """

    master_seed: int
    replicate_id: int
    bond: int
    _times: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    _count: int = 0
    _total: float = 0.0
    _next: int = 0
    _horizon: float = 0.0

    def ring_times(self, horizon):
        """Rings in [0, horizon]; grows the internal buffer as needed."""
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        if horizon > self._horizon:
            cap = self._count + _ring_cap(horizon - self._horizon)
            while True:
                buf = np.empty(cap, dtype=np.float64)
                buf[: self._count] = self._times[: self._count]
                cnt, total, nxt = _extend_rings(
                    int(self.master_seed) & MASK64,
                    int(self.replicate_id),
                    int(self.bond),
                    float(horizon),
                    self._total,
                    self._next,
                    buf,
                    self._count,
                )
                if cnt >= 0:
                    self._times = buf
                    self._count = cnt
                    self._total = total
                    self._next = nxt
                    self._horizon = float(horizon)
                    break
                cap *= 2
        out = self._times[: self._count]
        return out[out <= horizon].copy()


@dataclass(frozen=True)
class EventQueue:
    """Time-ordered merge of ring times over a bond range.

    Ties (possible only through floating-point coincidence) are broken by
    bond index, so the order is a deterministic function of the key.
    """

    times: np.ndarray
    bonds: np.ndarray
    bond_lo: int
    bond_hi: int
    horizon: float

    def __len__(self):
        return int(self.times.shape[0])


def merged_rings(seed, replicate, bond_lo, bond_hi, horizon):
    """(times, bonds) arrays for the merged bond range, sorted by time."""
    nb = int(bond_hi - bond_lo + 1)
    cap = _ring_cap(horizon)
    while True:
        rings, counts = rings_matrix(
            int(seed) & MASK64, int(replicate), int(bond_lo), nb, float(horizon), cap
        )
        if counts.min() >= 0:
            break
        cap *= 2
    times, bonds = _compact(rings, counts, int(bond_lo))
    order = np.argsort(times, kind="quicksort")
    times = times[order]
    bonds = bonds[order]
    _fix_ties(times, bonds)
    return times, bonds


def merge_events(seed, replicate, bond_lo, bond_hi, horizon):
    """EventQueue over bonds bond_lo..bond_hi (inclusive) up to ``horizon``."""
    if bond_hi < bond_lo:
        raise ValueError("empty bond range")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    times, bonds = merged_rings(seed, replicate, bond_lo, bond_hi, horizon)
    return EventQueue(times=times, bonds=bonds, bond_lo=int(bond_lo),
                      bond_hi=int(bond_hi), horizon=float(horizon))


def _fix_ties(times, bonds):
    # quicksort output is already deterministic; reorder tied runs by bond
    if times.shape[0] < 2:
        return
    eq = np.flatnonzero(times[1:] == times[:-1])
    if eq.size == 0:
        return
    visited = set()
    for i in eq:
        if i in visited:
            continue
        j = i
        while j + 1 < times.shape[0] and times[j + 1] == times[i]:
            visited.add(j)
            j += 1
        bonds[i : j + 1] = np.sort(bonds[i : j + 1])


def uniform_stream(seed, domain, replicate, count, offset=0):
    """``count`` doubles in (0, 1] from a keyed counter stream.

    Lanes ``offset`` .. ``offset+count-1`` of the (seed, domain, replicate)
    substream; a pure function of the key.
    """
    return _uniform_stream(int(seed) & MASK64, int(domain), int(replicate), int(count), int(offset))


@njit(cache=True, nogil=True)
def _uniform_stream(seed, domain, replicate, count, offset):
    out = np.empty(count, dtype=np.float64)
    k0 = U64(seed)
    k1 = U64(domain)
    c3 = U64(replicate)
    for i in range(count):
        j = offset + i
        x0, x1, x2, x3 = philox4(U64(j // 4), U64(1), U64(0), c3, k0, k1)
        lane = j % 4
        if lane == 0:
            x = x0
        elif lane == 1:
            x = x1
        elif lane == 2:
            x = x2
        else:
            x = x3
        out[i] = u64_to_unit(x)
    return out
