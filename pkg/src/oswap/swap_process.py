"""Continuous-time oriented swap process on [1, n], and its time variants.

The continuous-time variable-speed process replays the merged per-bond
clock streams in time order and applies the sorting operator at each ring.
Fixed-speed and discrete-time variants share the same skeleton chain with
different time parameterizations and are driven by their own keyed
substreams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import perms
from .clocks import (
    DOMAIN_BATCH,
    DOMAIN_CHAIN,
    MASK64,
    U64,
    exp_gap,
    merged_rings,
    philox4,
    u64_to_unit,
)

CONTINUOUS_VARIABLE = "continuous-variable"
CONTINUOUS_FIXED = "continuous-fixed"
DISCRETE_VARIABLE = "discrete-variable"
DISCRETE_FIXED = "discrete-fixed"

VARIANTS = (CONTINUOUS_VARIABLE, CONTINUOUS_FIXED, DISCRETE_VARIABLE, DISCRETE_FIXED)

UNFINISHED = np.nan


@dataclass(frozen=True)
class RecorderSpec:
    """What to record during a replay.

    snapshot_times: absolute times at which the full configuration (and the
      running inversion number) is captured; state at time t includes every
      event with time <= t.
    track_labels / trajectory_times: per-particle position samples.
    record_events: keep the full (time, bond, applied) event record.
    """

    snapshot_times: tuple = ()
    track_labels: tuple = ()
    trajectory_times: tuple = ()
    record_events: bool = False

    def sorted_snapshots(self):
        return np.asarray(sorted(self.snapshot_times), dtype=np.float64)

    def sorted_trajectory_times(self):
        return np.asarray(sorted(self.trajectory_times), dtype=np.float64)


@dataclass
class ProcessPath:
    """Outcome of one replay: finishing data plus requested recordings."""

    n: int
    horizon: float
    seed: int
    replicate: int
    variant: str
    final: np.ndarray                 # labels by position after the horizon
    finish: np.ndarray                # beta(k); NaN where not finished
    applied_count: int
    snapshot_times: np.ndarray
    snapshots: np.ndarray             # (num_snapshots, n) labels by position
    snapshot_inversions: np.ndarray   # inversion number at each snapshot
    track_labels: np.ndarray
    trajectory_times: np.ndarray
    trajectories: np.ndarray          # (num_tracked, num_times) positions
    events: tuple | None = None       # (times, bonds, applied) when recorded

    @property
    def absorbed(self):
        return bool(np.array_equal(self.final, np.arange(self.n, 0, -1)))

    @property
    def beta_star(self):
        return float(np.max(self.finish))

    def snapshot_at(self, t, atol=1e-9):
        idx = np.flatnonzero(np.isclose(self.snapshot_times, t, rtol=0.0, atol=atol))
        if idx.size == 0:
            raise ValueError(f"no snapshot recorded at t={t}")
        return self.snapshots[int(idx[0])]

    def inversions_at(self, t, atol=1e-9):
        idx = np.flatnonzero(np.isclose(self.snapshot_times, t, rtol=0.0, atol=atol))
        if idx.size == 0:
            raise ValueError(f"no snapshot recorded at t={t}")
        return int(self.snapshot_inversions[int(idx[0])])


@njit(cache=True, nogil=True)
def _replay(times, bonds, n, snap_times, snaps, snap_inv, track, traj_times, traj,
            record_applied, applied):
    fwd = np.empty(n, dtype=np.int32)
    pos = np.empty(n, dtype=np.int32)
    for i in range(n):
        fwd[i] = i + 1
        pos[i] = i + 1
    lastmove = np.zeros(n, dtype=np.float64)
    inv_count = 0
    si = 0
    ti = 0
    for e in range(times.shape[0]):
        t = times[e]
        while si < snap_times.shape[0] and snap_times[si] < t:
            for j in range(n):
                snaps[si, j] = fwd[j]
            snap_inv[si] = inv_count
            si += 1
        while ti < traj_times.shape[0] and traj_times[ti] < t:
            for j in range(track.shape[0]):
                traj[j, ti] = pos[track[j] - 1]
            ti += 1
        i = bonds[e]
        a = fwd[i - 1]
        b = fwd[i]
        if a < b:
            fwd[i - 1] = b
            fwd[i] = a
            pos[a - 1] = i + 1
            pos[b - 1] = i
            lastmove[a - 1] = t
            lastmove[b - 1] = t
            inv_count += 1
            if record_applied:
                applied[e] = True
    while si < snap_times.shape[0]:
        for j in range(n):
            snaps[si, j] = fwd[j]
        snap_inv[si] = inv_count
        si += 1
    while ti < traj_times.shape[0]:
        for j in range(track.shape[0]):
            traj[j, ti] = pos[track[j] - 1]
        ti += 1
    return fwd, pos, lastmove, inv_count


def _finish_from(pos, lastmove, n):
    # beta(k) is retrospective: valid only if particle k ended at n+1-k
    target = np.arange(n, 0, -1)
    finish = np.where(pos == target, lastmove, UNFINISHED)
    return finish


def _run_events(times, bonds, n, horizon, seed, replicate, variant, recorder):
    rec = recorder or RecorderSpec()
    snap_times = rec.sorted_snapshots()
    traj_times = rec.sorted_trajectory_times()
    track = np.asarray(sorted(rec.track_labels), dtype=np.int64)
    if track.size and (track.min() < 1 or track.max() > n):
        raise ValueError("tracked labels must lie in 1..n")
    snaps = np.empty((snap_times.shape[0], n), dtype=np.int32)
    snap_inv = np.empty(snap_times.shape[0], dtype=np.int64)
    traj = np.empty((track.shape[0], traj_times.shape[0]), dtype=np.int32)
    applied = (
        np.zeros(times.shape[0], dtype=np.bool_)
        if rec.record_events
        else np.zeros(0, dtype=np.bool_)
    )
    fwd, pos, lastmove, inv_count = _replay(
        times, bonds.astype(np.int64), n, snap_times, snaps, snap_inv,
        track, traj_times, traj, rec.record_events, applied,
    )
    return ProcessPath(
        n=n,
        horizon=float(horizon),
        seed=int(seed),
        replicate=int(replicate),
        variant=variant,
        final=fwd.astype(np.int64),
        finish=_finish_from(pos, lastmove, n),
        applied_count=int(inv_count),
        snapshot_times=snap_times,
        snapshots=snaps,
        snapshot_inversions=snap_inv,
        track_labels=track,
        trajectory_times=traj_times,
        trajectories=traj,
        events=(times, bonds, applied) if rec.record_events else None,
    )


def simulate(n, horizon, seed, replicate=0, recorder=None):
    """Oriented swap process driven by the shared per-bond clock streams."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    times, bonds = merged_rings(seed, replicate, 1, n - 1, horizon)
    return _run_events(times, bonds, n, horizon, seed, replicate,
                       CONTINUOUS_VARIABLE, recorder)


@njit(cache=True, nogil=True)
def _skeleton_fixed(n, steps, seed, replicate, out_bonds):
    """Fixed-speed skeleton: uniform choice from the current ascent set.

    Ascent positions are kept in a swap-remove array with an index map so
    each step is O(1).  Returns the number of steps actually taken (the
    chain absorbs at the reverse permutation).
    """
    fwd = np.empty(n, dtype=np.int32)
    for i in range(n):
        fwd[i] = i + 1
    asc_list = np.empty(n - 1, dtype=np.int32)
    asc_slot = np.full(n, -1, dtype=np.int32)  # bond -> slot (1-based bonds)
    count = 0
    for i in range(1, n):
        asc_list[count] = i
        asc_slot[i] = count
        count += 1
    k0 = U64(seed)
    k1 = U64(DOMAIN_CHAIN)
    c3 = U64(replicate)
    taken = 0
    draw = 0
    while taken < steps and count > 0:
        x0, x1, x2, x3 = philox4(U64(draw // 4), U64(0), U64(0), c3, k0, k1)
        lane = draw % 4
        if lane == 0:
            x = x0
        elif lane == 1:
            x = x1
        elif lane == 2:
            x = x2
        else:
            x = x3
        draw += 1
        u = u64_to_unit(x)
        idx = int(u * count)
        if idx == count:
            idx -= 1
        i = asc_list[idx]
        # apply the sort at bond i (always an ascent here)
        a = fwd[i - 1]
        fwd[i - 1] = fwd[i]
        fwd[i] = a
        out_bonds[taken] = i
        taken += 1
        for j in range(i - 1, i + 2):
            if 1 <= j <= n - 1:
                now = fwd[j - 1] < fwd[j]
                have = asc_slot[j] >= 0
                if now and not have:
                    asc_list[count] = j
                    asc_slot[j] = count
                    count += 1
                elif have and not now:
                    slot = asc_slot[j]
                    last = asc_list[count - 1]
                    asc_list[slot] = last
                    asc_slot[last] = slot
                    asc_slot[j] = -1
                    count -= 1
    return taken


@njit(cache=True, nogil=True)
def _chain_gaps(seed, replicate, count, offset):
    out = np.empty(count, dtype=np.float64)
    k0 = U64(seed)
    k1 = U64(DOMAIN_CHAIN)
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
        out[i] = exp_gap(x)
    return out


def simulate_variant(n, duration, variant, seed, replicate=0, recorder=None,
                     bond_sequence=None):
    """One of the four time parameterizations of the swap chain.

    ``duration`` is a time horizon for the continuous variants and a step
    count for the discrete ones.  ``bond_sequence`` (discrete-variable only)
    replaces the random location choices; this is the hook that lets tests
    drive two variants through the same skeleton.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if variant == CONTINUOUS_VARIABLE:
        if bond_sequence is not None:
            raise ValueError("bond_sequence applies to the discrete-variable variant")
        return simulate(n, duration, seed, replicate, recorder)

    if variant == DISCRETE_VARIABLE:
        steps = int(duration)
        if bond_sequence is not None:
            bonds = np.asarray(bond_sequence, dtype=np.int64)
            if bonds.size and (bonds.min() < 1 or bonds.max() > n - 1):
                raise ValueError("bond indices out of range")
            steps = bonds.shape[0]
        else:
            u = _chain_gaps_uniform(seed, replicate, steps)
            bonds = (u * (n - 1)).astype(np.int64) + 1
            np.clip(bonds, 1, n - 1, out=bonds)
        times = np.arange(1, steps + 1, dtype=np.float64)
        return _run_events(times, bonds, n, float(steps), seed, replicate, variant, recorder)

    # fixed-speed variants share the ascent-uniform skeleton
    max_steps = n * (n - 1) // 2
    if variant == DISCRETE_FIXED:
        steps = min(int(duration), max_steps)
        horizon = float(int(duration))
    else:
        # continuous-fixed: total rate 1, jump times are a unit Poisson stream
        gaps = _chain_gaps(int(seed) & MASK64, int(replicate), max_steps, 0)
        jump_times = np.cumsum(gaps)
        steps = int(np.searchsorted(jump_times, duration, side="right"))
        horizon = float(duration)
    out_bonds = np.empty(steps, dtype=np.int32)
    taken = _skeleton_fixed(n, steps, int(seed) & MASK64, int(replicate), out_bonds)
    bonds = out_bonds[:taken].astype(np.int64)
    if variant == DISCRETE_FIXED:
        times = np.arange(1, taken + 1, dtype=np.float64)
    else:
        times = jump_times[:taken]
    return _run_events(times, bonds, n, horizon, seed, replicate, variant, recorder)


def _chain_gaps_uniform(seed, replicate, count):
    # chain-domain uniform lanes, distinct from the gap lanes by counter word
    return _chain_uniforms(int(seed) & MASK64, int(replicate), int(count))


@njit(cache=True, nogil=True)
def _chain_uniforms(seed, replicate, count):
    out = np.empty(count, dtype=np.float64)
    k0 = U64(seed)
    k1 = U64(DOMAIN_CHAIN)
    c3 = U64(replicate)
    for i in range(count):
        x0, x1, x2, x3 = philox4(U64(i // 4), U64(2), U64(0), c3, k0, k1)
        lane = i % 4
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


_VARIANT_CODES = {
    CONTINUOUS_VARIABLE: 0,
    CONTINUOUS_FIXED: 1,
    DISCRETE_VARIABLE: 2,
    DISCRETE_FIXED: 3,
}


@njit(cache=True, nogil=True)
def _batch_final_states(n, duration, variant, seed, reps):
    """Final-state permutation indices for many independent replicates.

    Small-n bulk sampler for distribution-law tests.  The continuous
    variable-speed chain is built from the superposition of all bond clocks
    (rate n-1, uniform marks, no-op rings allowed), which realizes the same
    process law as the per-bond construction.  Returns factorial-base codes.
    """
    out = np.empty(reps, dtype=np.int64)
    fwd = np.empty(n, dtype=np.int32)
    asc_list = np.empty(max(n - 1, 1), dtype=np.int32)
    asc_slot = np.empty(n + 1, dtype=np.int32)
    k0 = U64(seed)
    k1 = U64(DOMAIN_BATCH)
    for r in range(reps):
        for i in range(n):
            fwd[i] = i + 1
        count = 0
        for i in range(n + 1):
            asc_slot[i] = -1
        for i in range(1, n):
            asc_list[count] = i
            asc_slot[i] = count
            count += 1
        t = 0.0
        steps_done = 0
        draw = 0
        while True:
            if variant <= 1:  # continuous: advance the clock first
                x = _batch_draw(U64(variant), U64(r), draw, k0, k1)
                draw += 1
                rate = (n - 1) if variant == 0 else 1
                t += exp_gap(x) / rate
                if t > duration:
                    break
                if variant == 1 and count == 0:
                    break  # absorbed; later rings change nothing
            else:
                if steps_done >= duration:
                    break
                if variant == 3 and count == 0:
                    break
            x = _batch_draw(U64(variant), U64(r), draw, k0, k1)
            draw += 1
            u = u64_to_unit(x)
            if variant == 0 or variant == 2:
                i = int(u * (n - 1)) + 1
                if i > n - 1:
                    i = n - 1
                act = fwd[i - 1] < fwd[i]
            else:
                idx = int(u * count)
                if idx == count:
                    idx -= 1
                i = asc_list[idx]
                act = True
            if act:
                a = fwd[i - 1]
                fwd[i - 1] = fwd[i]
                fwd[i] = a
                for j in range(i - 1, i + 2):
                    if 1 <= j <= n - 1:
                        now = fwd[j - 1] < fwd[j]
                        have = asc_slot[j] >= 0
                        if now and not have:
                            asc_list[count] = j
                            asc_slot[j] = count
                            count += 1
                        elif have and not now:
                            slot = asc_slot[j]
                            last = asc_list[count - 1]
                            asc_list[slot] = last
                            asc_slot[last] = slot
                            asc_slot[j] = -1
                            count -= 1
            steps_done += 1
        # factorial-base index of fwd
        code = 0
        for i in range(n):
            smaller = 0
            for j in range(i + 1, n):
                if fwd[j] < fwd[i]:
                    smaller += 1
            code = code * (n - i) + smaller
        out[r] = code
    return out


@njit(cache=True, inline="always")
def _batch_draw(c1, c2, j, k0, k1):
    x0, x1, x2, x3 = philox4(U64(j // 4), c1, c2, U64(0), k0, k1)
    lane = j % 4
    if lane == 0:
        return x0
    if lane == 1:
        return x1
    if lane == 2:
        return x2
    return x3


def sample_final_states(n, duration, variant, seed, replicates):
    """Factorial-base codes of the state at ``duration`` for many replicates."""
    if variant not in _VARIANT_CODES:
        raise ValueError(f"unknown variant {variant!r}")
    return _batch_final_states(int(n), float(duration), _VARIANT_CODES[variant],
                               int(seed) & (2**64 - 1), int(replicates))


def state_code(perm_tuple):
    """Factorial-base index matching sample_final_states."""
    n = len(perm_tuple)
    code = 0
    for i in range(n):
        smaller = sum(1 for j in range(i + 1, n) if perm_tuple[j] < perm_tuple[i])
        code = code * (n - i) + smaller
    return code


def visited_states(n, bonds):
    """Skeleton chain states id, s_1, s_2, ... under the given bond choices."""
    perm = perms.Permutation.identity(n)
    states = [perm.as_tuple()]
    for i in bonds:
        if perm.has_ascent(int(i)):
            perm.swap_at(int(i))
        states.append(perm.as_tuple())
    return states


@dataclass(frozen=True)
class EmpiricalMeasure:
    """n-point measure putting mass 1/n at (position/n, label/n)."""

    n: int
    labels: np.ndarray  # labels by position (a permutation of 1..n)

    def points(self):
        k = np.arange(1, self.n + 1)
        return k / self.n, self.labels / self.n

    def cdf(self, x, y):
        """Mass of {(p, l): p <= x, l <= y}."""
        kmax = min(int(np.floor(x * self.n + 1e-9)), self.n)
        if kmax <= 0:
            return 0.0
        thresh = y * self.n + 1e-9
        return float(np.count_nonzero(self.labels[:kmax] <= thresh)) / self.n

    def cdf_grid(self, xs, ys):
        """CDF on a grid: rows follow xs, columns follow ys."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        counts = np.zeros((xs.size, ys.size))
        kidx = np.minimum(np.floor(xs * self.n + 1e-9).astype(int), self.n)
        for i, kmax in enumerate(kidx):
            if kmax <= 0:
                continue
            lab = np.sort(self.labels[:kmax])
            counts[i] = np.searchsorted(lab, ys * self.n + 1e-9, side="right")
        return counts / self.n


def empirical_measure(path, s):
    """Empirical permutation-matrix measure at scaled time s (from snapshot)."""
    labels = path.snapshot_at(s * path.n)
    return EmpiricalMeasure(n=path.n, labels=np.asarray(labels, dtype=np.int64))


def scaled_trajectory(path, k):
    """(s grid, scaled positions) of particle k from the recorded samples."""
    idx = np.flatnonzero(path.track_labels == k)
    if idx.size == 0:
        raise ValueError(f"label {k} was not tracked")
    s_grid = path.trajectory_times / path.n
    return s_grid, path.trajectories[int(idx[0])] / path.n
