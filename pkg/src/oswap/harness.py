"""Experiment orchestration, empirical statistics, machine-readable reports.

Every experiment is a frozen dataclass; rerunning one with identical fields
reproduces identical outputs bit for bit (replicate-keyed randomness,
order-normalized aggregation).  Statistical targets come from the limits
module; every comparison is recorded as a Verdict carrying its tolerance so
failures are auditable.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from . import coupling, limits, lpp, perms, swap_process, tasep, tracy_widom

EXPERIMENT_KINDS = (
    "identity-suite",
    "coupling-suite",
    "hydro",
    "inversions",
    "finishing",
    "trajectories",
    "tw-fluct",
    "lpp",
)


@dataclass(frozen=True)
class Experiment:
    """A fully serializable experiment specification."""

    kind: str
    n: int = 0
    k: int = 0
    s_values: tuple = ()
    replicates: int = 1
    seed: int = 42
    horizon: float = 0.0
    t: float = 0.0
    threads: int = 1
    trials: int = 10_000
    tolerances: dict = field(default_factory=dict)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


@dataclass
class Verdict:
    """One named comparison: pass iff |observed - target| <= tolerance,

    or, for sup-norm style statistics, observed <= tolerance (target 0).
    """

    name: str
    observed: float
    target: float
    tolerance: float
    passed: bool
    provenance: dict = field(default_factory=dict)

    @classmethod
    def close(cls, name, observed, target, tolerance, **prov):
        ok = abs(float(observed) - float(target)) <= float(tolerance)
        return cls(name, float(observed), float(target), float(tolerance), bool(ok), prov)

    @classmethod
    def below(cls, name, observed, tolerance, **prov):
        return cls(name, float(observed), 0.0, float(tolerance),
                   bool(float(observed) <= float(tolerance)), prov)

    @classmethod
    def exact(cls, name, failures, total, **prov):
        return cls(name, float(failures), 0.0, 0.0, failures == 0,
                   dict(prov, total=total))


@dataclass
class ExperimentReport:
    experiment: Experiment
    verdicts: list
    artifacts: list

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    def to_json(self):
        return {
            "experiment": self.experiment.kind,
            "parameters": _clean(dataclasses.asdict(self.experiment)),
            "seed": self.experiment.seed,
            "verdicts": [
                {
                    "name": v.name,
                    "observed": v.observed,
                    "target": v.target,
                    "tolerance": v.tolerance,
                    "pass": v.passed,
                    "provenance": _clean(v.provenance),
                }
                for v in self.verdicts
            ],
            "artifacts": list(self.artifacts),
        }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_report(report, path):
    payload = json.dumps(report.to_json(), indent=2, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(payload + "\n")
    return path


def write_csv(path, header, columns):
    arr = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return path


# ---------------------------------------------------------------------------
# statistics


def ks_distance(samples, cdf):
    """sup over sample points of |empirical - model|, both one-sided jumps."""
    xs = np.sort(np.asarray(samples, dtype=float))
    m = xs.size
    if m == 0:
        raise ValueError("need at least one sample")
    model = np.asarray(cdf(xs), dtype=float)
    hi = np.arange(1, m + 1) / m
    lo = np.arange(0, m) / m
    return float(np.max(np.maximum(np.abs(model - hi), np.abs(model - lo))))


def chi_square_two_sample(counts_a, counts_b):
    """Two-sample chi-square statistic and p-value over shared cells."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    tot = a + b
    mask = tot > 0
    ka = np.sqrt(b[mask].sum() / a[mask].sum())
    kb = 1.0 / ka
    stat = float(np.sum((ka * a[mask] - kb * b[mask]) ** 2 / tot[mask]))
    dof = int(mask.sum()) - 1
    return stat, float(scipy_stats.chi2.sf(stat, dof)), dof


def _map_replicates(fn, replicates, threads):
    """Replicate-indexed results; identical output for any thread count."""
    out = [None] * replicates
    if threads <= 1:
        for r in range(replicates):
            out[r] = fn(r)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for r, res in zip(range(replicates), pool.map(fn, range(replicates))):
            out[r] = res
    return out


# ---------------------------------------------------------------------------
# experiment bodies


def _run_identity_suite(exp, out_dir):
    rng = np.random.default_rng(exp.seed)
    trials = exp.trials
    verdicts = []

    # reversal identity of the sorting operators
    fails = 0
    for _ in range(trials):
        n = int(rng.integers(2, 13))
        length = int(rng.integers(0, 61))
        seq = rng.integers(1, n, size=length)
        fwd = perms.sort_sequence(n, seq)
        rev = perms.sort_sequence(n, seq[::-1])
        if fwd.as_tuple() != rev.inverse_perm().as_tuple():
            fails += 1
    verdicts.append(Verdict.exact("reversal-identity", fails, trials, seed=exp.seed))

    # queue-length forms of cutoff and pushback
    f_cut = f_push = f_commute = 0
    f_l32 = [0, 0, 0]
    f_l71 = [0, 0, 0]
    for _ in range(trials):
        rho = _random_config(rng)
        kk = int(rng.integers(0, 12))
        nn = int(rng.integers(-6, 15))
        span = _span_of(rho, extra=16)
        cut = tasep.cutoff(rho, kk)
        push = tasep.pushback(rho, nn)
        for x in span:
            if cut.queue_length(x) != min(rho.queue_length(x), kk):
                f_cut += 1
                break
        for x in span:
            if push.queue_length(x) != min(rho.queue_length(x), max(nn - x, 0)):
                f_push += 1
                break
        if tasep.pushback(tasep.cutoff(rho, kk), nn) != tasep.cutoff(tasep.pushback(rho, nn), kk):
            f_commute += 1
        # jump interchange laws
        m = int(rng.integers(1, max(nn, 2))) if nn >= 2 else 1
        if 1 <= m <= nn - 1:
            lhs = tasep.pushback(tasep.cutoff(tasep.jump(rho, m), kk), nn)
            rhs = tasep.jump(tasep.pushback(tasep.cutoff(rho, kk), nn), m)
            if lhs != rhs:
                f_l32[0] += 1
        m_hi = nn + int(rng.integers(0, 6))
        lhs = tasep.pushback(tasep.cutoff(tasep.jump(rho, m_hi), kk), nn)
        if lhs != tasep.pushback(tasep.cutoff(rho, kk), nn):
            f_l32[1] += 1
        m_lo = -int(rng.integers(1, 8))
        if rho.queue_length(0) >= kk:
            lhs = tasep.pushback(tasep.cutoff(tasep.jump(rho, m_lo), kk), nn)
            if lhs != tasep.pushback(tasep.cutoff(rho, kk), nn):
                f_l32[2] += 1
        # second-class transport under cutoff / pushback / both
        pair = _random_pair(rng)
        npart = pair.rho.particle_count()
        if npart is not None and npart >= 1:
            kk2 = int(rng.integers(1, npart + 1))
            after = pair.apply_cutoff(kk2)
            if after.discrepancy != tasep.second_class_pos(after.rho, after.rho_prime):
                f_l71[0] += 1
            after = pair.apply_pushback(nn)
            if after.discrepancy != tasep.second_class_pos(after.rho, after.rho_prime):
                f_l71[1] += 1
            if kk2 <= nn:
                both = pair.apply_cutoff(kk2).apply_pushback(nn)
                want = tasep.second_class_pos(both.rho, both.rho_prime)
                combined = min(
                    max(pair.discrepancy, pair.rho.particle_pos(kk2)),
                    tasep.cutoff(pair.rho, kk2).hole_pos(
                        nn, tasep.cutoff(pair.rho, kk2).queue_length(nn)
                    ),
                )
                if both.discrepancy != want or combined != want:
                    f_l71[2] += 1
    verdicts.append(Verdict.exact("cutoff-queue-form", f_cut, trials))
    verdicts.append(Verdict.exact("pushback-queue-form", f_push, trials))
    verdicts.append(Verdict.exact("cutoff-pushback-commute", f_commute, trials))
    verdicts.append(Verdict.exact("jump-interchange-interior", f_l32[0], trials))
    verdicts.append(Verdict.exact("jump-interchange-right", f_l32[1], trials))
    verdicts.append(Verdict.exact("jump-interchange-left", f_l32[2], trials))
    verdicts.append(Verdict.exact("second-class-cutoff", f_l71[0], trials))
    verdicts.append(Verdict.exact("second-class-pushback", f_l71[1], trials))
    verdicts.append(Verdict.exact("second-class-combined", f_l71[2], trials))
    return verdicts, []


def _random_config(rng, solid_prob=0.5):
    width = int(rng.integers(0, 24))
    bits = (rng.random(width) < 0.5).astype(np.int8)
    start = int(rng.integers(-10, 11))
    if rng.random() < solid_prob:
        return tasep.BinaryConfig(start, start + 1, bits)
    return tasep.BinaryConfig(None, start, bits)


def _random_pair(rng):
    """Compatible pair: finite configuration plus one extra particle."""
    base = _random_config(rng, solid_prob=0.0)
    lo = base.win_start - int(rng.integers(1, 8))
    hi = (base.rightmost() or lo) + int(rng.integers(1, 8))
    holes = [x for x in range(lo, hi + 1) if not base.occupied(x)]
    site = int(holes[int(rng.integers(0, len(holes)))])
    upper = tasep.BinaryConfig.from_particles(base.particles() + [site])
    return tasep.SecondClassPair.create(upper, base)


def _span_of(rho, extra=16):
    lo = (rho.solid_to if rho.is_solid else rho.win_start) - extra
    hi = (rho.rightmost() or 0) + extra
    return range(lo, hi + 1)


def _run_coupling_suite(exp, out_dir):
    verdicts = []
    n = exp.n or 50
    horizon = exp.horizon or 4.0 * n
    ks = (exp.k,) if exp.k else (1, 10, 25, 49)
    seeds = [exp.seed + r for r in range(exp.replicates)]

    def one(args):
        seed, k = args
        return coupling.coupling_check(n, k, horizon, seed)

    jobs = [(seed, k) for seed in seeds for k in ks]
    reports = _map_replicates(lambda i: one(jobs[i]), len(jobs), exp.threads)
    fails = sum(0 if r.ok else 1 for r in reports)
    events = sum(r.events for r in reports)
    verdicts.append(
        Verdict.exact("pathwise-coupling", fails, len(jobs), events=events,
                      n=n, horizon=horizon, k_values=list(ks), seeds=len(seeds))
    )
    return verdicts, []


def _run_hydro(exp, out_dir):
    n = exp.n or 1000
    s_values = exp.s_values or (0.5, 1.0, 1.5)
    tol = exp.tol("cdf-sup", 0.05)
    horizon = max(s_values) * n
    rec = swap_process.RecorderSpec(snapshot_times=tuple(s * n for s in s_values))
    path = swap_process.simulate(n, horizon, exp.seed, 0, rec)
    grid = np.linspace(0.0, 1.0, 21)
    verdicts = []
    artifacts = []
    for s in s_values:
        emp = swap_process.empirical_measure(path, s)
        emp_grid = emp.cdf_grid(grid, grid)
        lim_grid = np.array([[limits.kappa_cdf(s, x, y) for y in grid] for x in grid])
        gap = float(np.max(np.abs(emp_grid - lim_grid)))
        verdicts.append(Verdict.below(f"hydro-cdf-sup-s={s}", gap, tol, n=n, seed=exp.seed))
        if out_dir:
            xs, ys = np.meshgrid(grid, grid, indexing="ij")
            path_csv = os.path.join(out_dir, f"measure_s{s}.csv")
            write_csv(path_csv,
                      ["s", "x", "y", "mass_cdf_empirical", "mass_cdf_limit"],
                      [np.full(xs.size, s), xs.ravel(), ys.ravel(),
                       emp_grid.ravel(), lim_grid.ravel()])
            artifacts.append(path_csv)
    return verdicts, artifacts


def _run_inversions(exp, out_dir):
    n = exp.n or 1000
    s_values = exp.s_values or (0.5, 1.0, 1.5)
    tol = exp.tol("mean-inv", 0.01)
    horizon = max(s_values) * n
    rec = swap_process.RecorderSpec(snapshot_times=tuple(s * n for s in s_values))
    total = n * (n - 1) / 2

    def one(r):
        path = swap_process.simulate(n, horizon, exp.seed, r, rec)
        return [path.inversions_at(s * n) / total for s in s_values]

    rows = np.array(_map_replicates(one, exp.replicates, exp.threads))
    means = rows.mean(axis=0)
    verdicts = []
    for s, mean in zip(s_values, means):
        verdicts.append(
            Verdict.close(f"inversions-s={s}", mean, limits.inversion_limit(s), tol,
                          n=n, replicates=exp.replicates, seed=exp.seed)
        )
    return verdicts, []


def _run_finishing(exp, out_dir):
    n = exp.n or 1000
    horizon = exp.horizon or 2.5 * n
    band_tol = exp.tol("beta-band", 0.08)
    frac_required = exp.tol("beta-band-fraction", 0.90)
    star_required = exp.tol("beta-star-fraction", 0.95)
    lo_k, hi_k = int(0.1 * n), int(0.9 * n)
    ks = np.arange(lo_k, hi_k + 1)
    gammas = limits.finishing_time_limit(ks / n)

    def one(r):
        path = swap_process.simulate(n, horizon, exp.seed, r)
        beta = path.finish
        band = np.nanmax(np.abs(beta[lo_k - 1 : hi_k] / n - gammas))
        star = np.nanmax(beta) / n if np.all(np.isfinite(beta)) else np.nan
        return band, star

    rows = np.array(_map_replicates(one, exp.replicates, exp.threads))
    band_ok = np.mean(rows[:, 0] <= band_tol)
    star_ok = np.mean((rows[:, 1] >= 1.85) & (rows[:, 1] <= 2.10))
    verdicts = [
        Verdict(name="finishing-band", observed=float(band_ok), target=1.0,
                tolerance=1.0 - frac_required, passed=bool(band_ok >= frac_required),
                provenance={"n": n, "replicates": exp.replicates, "band_tol": band_tol}),
        Verdict(name="absorbing-time", observed=float(star_ok), target=1.0,
                tolerance=1.0 - star_required, passed=bool(star_ok >= star_required),
                provenance={"n": n, "replicates": exp.replicates, "window": [1.85, 2.10]}),
    ]
    artifacts = []
    if out_dir:
        path_csv = os.path.join(out_dir, "finishing.csv")
        pathr = swap_process.simulate(n, horizon, exp.seed, 0)
        write_csv(path_csv, ["k", "beta_over_n", "gamma_target"],
                  [ks.astype(float), pathr.finish[lo_k - 1 : hi_k] / n, gammas])
        artifacts.append(path_csv)
    return verdicts, artifacts


def _run_trajectories(exp, out_dir):
    n = exp.n or 1000
    k = exp.k or 300
    s_values = exp.s_values or (0.3, 0.8, 1.3)
    tol = exp.tol("traj-ks", 0.06)
    y = k / n
    horizon = max(s_values) * n
    rec = swap_process.RecorderSpec(track_labels=(k,),
                                    trajectory_times=tuple(s * n for s in s_values))

    def one(r):
        path = swap_process.simulate(n, horizon, exp.seed, r, rec)
        return path.trajectories[0] / n

    rows = np.array(_map_replicates(one, exp.replicates, exp.threads))
    verdicts = []
    artifacts = []
    for j, s in enumerate(s_values):
        d = ks_distance(rows[:, j], lambda x: limits.phi_cdf(y, s, x))
        verdicts.append(Verdict.below(f"trajectory-ks-s={s}", d, tol,
                                      n=n, k=k, replicates=exp.replicates))
    # second-class particle speed
    t = exp.t or 500.0
    sc_reps = exp.tolerances.get("second-class-replicates", 0)
    if sc_reps:
        sc_tol = exp.tol("second-class-ks", 0.05)

        def one_sc(r):
            _, xs, _ = tasep.second_class_trajectory(0, t, exp.seed, r, sample_times=(t,))
            return xs[0] / t

        vals = np.array(_map_replicates(one_sc, int(sc_reps), exp.threads))
        d = ks_distance(vals, lambda x: np.clip((np.asarray(x) + 1) / 2, 0.0, 1.0))
        verdicts.append(Verdict.below("second-class-ks", d, sc_tol,
                                      t=t, replicates=int(sc_reps)))
    if out_dir:
        path_csv = os.path.join(out_dir, "trajectories.csv")
        cols = [np.repeat(s_values, rows.shape[0]),
                np.full(rows.size, float(k)),
                rows.T.ravel()]
        write_csv(path_csv, ["s", "k", "position"], cols)
        artifacts.append(path_csv)
    return verdicts, artifacts


def _run_tw_fluct(exp, out_dir):
    n = exp.n or 2000
    k = exp.k or n // 2
    y = k / n
    sc = limits.tw_scaling(y, n)
    horizon = exp.horizon or (sc.center + 8.0 * sc.scale)
    tw_tol = exp.tol("tw-ks", 0.12)
    agree_tol = exp.tol("cdf-agree", 0.05)

    def one(r):
        path = swap_process.simulate(n, horizon, exp.seed, r)
        return path.finish[k - 1]

    betas = np.array(_map_replicates(one, exp.replicates, exp.threads))
    scaled = (betas - sc.center) / sc.scale
    sol = tracy_widom._default_solution()
    d_beta = ks_distance(scaled, sol.cdf)

    rows, cols = lpp.grid_shape(y, n)
    gs = lpp.lpp_times(rows, cols, exp.seed, exp.replicates)
    scaled_lpp = lpp.johansson_scaled(gs, y, n, rows=rows, cols=cols)
    d_lpp = ks_distance(scaled_lpp, sol.cdf)

    # two-sample sup distance between the empirical CDFs
    allv = np.sort(np.concatenate([scaled, scaled_lpp]))
    f1 = np.searchsorted(np.sort(scaled), allv, side="right") / scaled.size
    f2 = np.searchsorted(np.sort(scaled_lpp), allv, side="right") / scaled_lpp.size
    d_two = float(np.max(np.abs(f1 - f2)))

    verdicts = [
        Verdict.below("tw-ks-swap", d_beta, tw_tol, n=n, k=k, replicates=exp.replicates),
        Verdict.below("tw-ks-lpp", d_lpp, tw_tol, rows=rows, cols=cols),
        Verdict.below("swap-lpp-agreement", d_two, agree_tol,
                      note="soft: two-sample noise at this replicate count is ~0.06"),
    ]
    artifacts = []
    if out_dir:
        path_csv = os.path.join(out_dir, "fluctuations.csv")
        write_csv(path_csv, ["scaled_value"], [np.sort(scaled)])
        path2 = os.path.join(out_dir, "fluctuations_lpp.csv")
        write_csv(path2, ["scaled_value"], [np.sort(scaled_lpp)])
        artifacts += [path_csv, path2]
    return verdicts, artifacts


def _run_lpp(exp, out_dir):
    n = exp.n or 2000
    y = 0.5
    rows, cols = lpp.grid_shape(y, n)
    gs = lpp.lpp_times(rows, cols, exp.seed, exp.replicates)
    mean_ratio = float(np.mean(gs) / cols)
    target = limits.finishing_time_limit(y) * n / cols
    verdicts = [
        Verdict.close("lpp-mean", mean_ratio, target, exp.tol("lpp-mean", 0.05),
                      rows=rows, cols=cols, replicates=exp.replicates)
    ]
    artifacts = []
    if out_dir:
        path_csv = os.path.join(out_dir, "lpp_scaled.csv")
        write_csv(path_csv, ["scaled_value"],
                  [np.sort(lpp.johansson_scaled(gs, y, n, rows=rows, cols=cols))])
        artifacts.append(path_csv)
    return verdicts, artifacts


_RUNNERS = {
    "identity-suite": _run_identity_suite,
    "coupling-suite": _run_coupling_suite,
    "hydro": _run_hydro,
    "inversions": _run_inversions,
    "finishing": _run_finishing,
    "trajectories": _run_trajectories,
    "tw-fluct": _run_tw_fluct,
    "lpp": _run_lpp,
}


def run_experiment(exp, out_dir=None):
    """Execute one experiment; returns an ExperimentReport."""
    if exp.kind not in _RUNNERS:
        raise ValueError(f"unknown experiment kind {exp.kind!r}; expected one of {EXPERIMENT_KINDS}")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    verdicts, artifacts = _RUNNERS[exp.kind](exp, out_dir)
    return ExperimentReport(experiment=exp, verdicts=verdicts, artifacts=artifacts)
