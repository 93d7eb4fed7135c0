"""Permutations, sorting operators, inversion counting, exact enumeration.

Permutations are 1-based bijections on {1..n} stored with their inverse, so
both "label at position i" and "position of label k" are O(1) and a single
adjacent swap updates everything in constant time.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

VARIABLE_SPEED = "variable-speed"
FIXED_SPEED = "fixed-speed"


class Permutation:
    """Array-backed permutation with a synchronized inverse.

    ``forward[i-1]`` is the label at position i; ``inverse[k-1]`` the
    position of label k.
    """

    __slots__ = ("n", "forward", "inverse")

    def __init__(self, forward):
        fwd = np.asarray(forward, dtype=np.int64)
        n = fwd.shape[0]
        if n == 0 or not np.array_equal(np.sort(fwd), np.arange(1, n + 1)):
            raise ValueError("not a permutation of 1..n")
        inv = np.empty(n, dtype=np.int64)
        inv[fwd - 1] = np.arange(1, n + 1)
        self.n = int(n)
        self.forward = fwd
        self.inverse = inv

    @classmethod
    def identity(cls, n):
        return cls(np.arange(1, n + 1))

    @classmethod
    def reverse(cls, n):
        return cls(np.arange(n, 0, -1))

    def copy(self):
        out = object.__new__(Permutation)
        out.n = self.n
        out.forward = self.forward.copy()
        out.inverse = self.inverse.copy()
        return out

    def inverse_perm(self):
        out = object.__new__(Permutation)
        out.n = self.n
        out.forward = self.inverse.copy()
        out.inverse = self.forward.copy()
        return out

    def __call__(self, i):
        return int(self.forward[i - 1])

    def position_of(self, k):
        return int(self.inverse[k - 1])

    def as_tuple(self):
        return tuple(int(v) for v in self.forward)

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.forward, other.forward)

    def __hash__(self):
        return hash(self.as_tuple())

    def __repr__(self):
        return f"Permutation({self.as_tuple()})"

    def has_ascent(self, i):
        """True iff forward[i] < forward[i+1] (1-based bond i)."""
        if not 1 <= i <= self.n - 1:
            raise ValueError(f"bond index {i} out of range 1..{self.n - 1}")
        return self.forward[i - 1] < self.forward[i]

    def swap_at(self, i):
        """In-place adjacent transposition at bond i (unconditional)."""
        a = self.forward[i - 1]
        b = self.forward[i]
        self.forward[i - 1] = b
        self.forward[i] = a
        self.inverse[a - 1] = i + 1
        self.inverse[b - 1] = i


class AscentSet:
    """Positions i with sigma(i) < sigma(i+1), maintained incrementally.

    Only bonds i-1, i, i+1 can change status when a swap happens at i.
    """

    __slots__ = ("perm", "_is_ascent", "count")

    def __init__(self, perm):
        self.perm = perm
        fwd = perm.forward
        self._is_ascent = fwd[:-1] < fwd[1:]
        self.count = int(self._is_ascent.sum())

    def positions(self):
        return [int(i) + 1 for i in np.flatnonzero(self._is_ascent)]

    def __contains__(self, i):
        return bool(self._is_ascent[i - 1])

    def apply_sort(self, i):
        """Apply the sorting operator at bond i; returns True if it acted."""
        perm = self.perm
        if not perm.has_ascent(i):
            return False
        perm.swap_at(i)
        for j in (i - 1, i, i + 1):
            if 1 <= j <= perm.n - 1:
                now = perm.forward[j - 1] < perm.forward[j]
                if now != self._is_ascent[j - 1]:
                    self.count += 1 if now else -1
                    self._is_ascent[j - 1] = now
        return True


def apply_sort(perm, i):
    """Sorting operator at bond i: swap into decreasing order if ascending.

    Returns a new permutation; equals the inversion-number maximum of the
    pair {sigma, sigma*tau_i}.
    """
    if not 1 <= i <= perm.n - 1:
        raise ValueError(f"bond index {i} out of range 1..{perm.n - 1}")
    out = perm.copy()
    if out.has_ascent(i):
        out.swap_at(i)
    return out


def sort_sequence(n, seq):
    """Left-to-right product id . S_{i_1} ... S_{i_k}."""
    perm = Permutation.identity(n)
    for i in seq:
        if not 1 <= i <= n - 1:
            raise ValueError(f"bond index {i} out of range 1..{n - 1}")
        if perm.has_ascent(i):
            perm.swap_at(i)
    return perm


def inversion_number(perm):
    """Number of out-of-order pairs, O(n log n) by merge counting."""
    if isinstance(perm, Permutation):
        arr = perm.forward
    else:
        arr = np.asarray(perm, dtype=np.int64)
    return _merge_count(list(arr))


def _merge_count(a):
    n = len(a)
    if n < 2:
        return 0
    mid = n // 2
    left, right = a[:mid], a[mid:]
    inv = _merge_count(left) + _merge_count(right)
    merged = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            j += 1
            inv += len(left) - i
    a[:] = merged + left[i:] + right[j:]
    return inv


_ENUM_MAX_N = 7


def enumerate_discrete(n, steps, variant):
    """Exact state distribution of a discrete-time chain after ``steps``.

    variable-speed: the swap location is uniform on {1..n-1} each step.
    fixed-speed: uniform on the current ascent set; the reverse permutation
    (empty ascent set) is absorbing.  Probabilities are exact rationals and
    sum to 1.
    """
    if n > _ENUM_MAX_N:
        raise ValueError(f"n={n} too large for exact enumeration (max {_ENUM_MAX_N})")
    if variant not in (VARIABLE_SPEED, FIXED_SPEED):
        raise ValueError(f"unknown variant {variant!r}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    ident = tuple(range(1, n + 1))
    dist = {ident: Fraction(1)}
    for _ in range(steps):
        new = {}
        for state, p in dist.items():
            if variant == VARIABLE_SPEED:
                choices = range(1, n)
                share = p / (n - 1)
                for i in choices:
                    nxt = _sorted_state(state, i)
                    new[nxt] = new.get(nxt, Fraction(0)) + share
            else:
                ascents = [i for i in range(1, n) if state[i - 1] < state[i]]
                if not ascents:
                    new[state] = new.get(state, Fraction(0)) + p
                    continue
                share = p / len(ascents)
                for i in ascents:
                    nxt = _sorted_state(state, i)
                    new[nxt] = new.get(nxt, Fraction(0)) + share
        dist = new
    assert sum(dist.values()) == 1
    return dist


def _sorted_state(state, i):
    if state[i - 1] < state[i]:
        lst = list(state)
        lst[i - 1], lst[i] = lst[i], lst[i - 1]
        return tuple(lst)
    return state


def invert_tuple(state):
    inv = [0] * len(state)
    for pos, lab in enumerate(state, start=1):
        inv[lab - 1] = pos
    return tuple(inv)
