"""Command-line interface.

Subcommands: simulate (swap process paths), tasep (coupled TASEP runs and
coupling checks), limits (closed-form evaluation), tw (Tracy-Widom tables),
lpp (scaled passage-time samples), verify (identity + statistical suites),
report (aggregate prior outputs).  Machine-readable JSON is the primary
output; CSV for bulk tables.  Exit codes: 0 success, 1 usage error, 2 a
verification suite ran and failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import coupling, harness, limits, lpp, perms, swap_process, tasep, tracy_widom

ENV_OUT_DIR = "OSWAP_OUT_DIR"

SUITES = {
    "identities": ("identity-suite",),
    "coupling": ("coupling-suite",),
    "hydro": ("hydro",),
    "inversions": ("inversions",),
    "finishing": ("finishing",),
    "trajectories": ("trajectories",),
    "fluct": ("tw-fluct",),
    "lpp": ("lpp",),
    "all": harness.EXPERIMENT_KINDS,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    top = _Parser(prog="oswap", description=__doc__.splitlines()[0])
    top.add_argument("--config", help="JSON file of flag defaults (same names as flags)")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=42, help="master seed for all keyed streams")
        p.add_argument("--replicates", type=int, default=1, help="number of replicates")
        p.add_argument("--threads", type=int, default=1, help="worker threads for replicates")
        p.add_argument("--out-dir", default=None,
                       help=f"output directory (default: ${ENV_OUT_DIR} or '.')")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="primary output format")

    p = sub.add_parser("simulate", help="run the oriented swap process")
    common(p)
    p.add_argument("-n", type=int, required=True, help="number of particles")
    p.add_argument("--horizon", type=float, default=None,
                   help="time horizon (default 2.5 n for continuous variants)")
    p.add_argument("--variant", choices=swap_process.VARIANTS,
                   default=swap_process.CONTINUOUS_VARIABLE, help="time parameterization")
    p.add_argument("--steps", type=int, default=None, help="steps for discrete variants")
    p.add_argument("--exact", action="store_true",
                   help="exact state distribution by dynamic programming (small n)")
    p.add_argument("--snapshot-s", type=float, nargs="*", default=[],
                   help="scaled times at which to export the configuration")
    p.add_argument("--track", type=int, nargs="*", default=[],
                   help="particle labels whose trajectories to record")
    p.add_argument("--traj-points", type=int, default=101,
                   help="trajectory sample count over [0, horizon]")

    p = sub.add_parser("tasep", help="coupled TASEP runs and coupling checks")
    common(p)
    p.add_argument("-n", type=int, default=50, help="interval length for the finite process")
    p.add_argument("-k", type=int, required=True, help="step-initial mark threshold")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--infinite", action="store_true",
                   help="windowed infinite-lattice process instead of [1, n]")
    p.add_argument("--check-coupling", action="store_true",
                   help="verify the pathwise identities along the replay")
    p.add_argument("--snapshot-t", type=float, nargs="*", default=[],
                   help="times at which to export density profiles")
    p.add_argument("--profile-points", type=int, default=101,
                   help="grid size for density-profile export")

    p = sub.add_parser("limits", help="evaluate a closed-form limit quantity")
    common(p)
    p.add_argument("--quantity", required=True,
                   choices=("rost", "envelopes", "phi", "lambda", "f", "F",
                            "kappa-cdf", "w", "southeast", "inversion",
                            "tw-scaling", "psi"),
                   help="which limiting object to evaluate")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--y", type=float, default=None)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--grid", type=int, default=0,
                   help="tabulate on a grid of this many points per axis (CSV)")

    p = sub.add_parser("tw", help="tabulate the Tracy-Widom distribution")
    common(p)
    p.add_argument("--z-min", type=float, default=-5.0)
    p.add_argument("--z-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=141)
    p.add_argument("--quantile", type=float, nargs="*", default=[],
                   help="probabilities at which to report quantiles")
    p.add_argument("--x-start", type=float, default=8.0)
    p.add_argument("--x-min", type=float, default=-10.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--scheme", choices=(tracy_widom.SCHEME_RK4, tracy_widom.SCHEME_RK38),
                   default=tracy_widom.SCHEME_RK4)
    p.add_argument("--init", choices=(tracy_widom.INIT_AIRY, tracy_widom.INIT_ASYMPTOTIC),
                   default=tracy_widom.INIT_AIRY)

    p = sub.add_parser("lpp", help="sample scaled last-passage times")
    common(p)
    p.add_argument("-n", type=int, required=True, help="system size the grid maps to")
    p.add_argument("--y", type=float, default=0.5, help="label fraction (grid aspect)")

    p = sub.add_parser("verify", help="run identity and statistical suites")
    common(p)
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("-n", type=int, default=0, help="override system size (0: suite default)")
    p.add_argument("--quick", action="store_true",
                   help="reduced replicate counts for a fast smoke run")

    p = sub.add_parser("report", help="aggregate previously written reports")
    common(p)
    p.add_argument("paths", nargs="+", help="report JSON files to aggregate")

    return top


def _out_dir(args):
    out = args.out_dir or os.environ.get(ENV_OUT_DIR) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _cmd_simulate(args):
    out = _out_dir(args)
    if args.exact:
        steps = args.steps if args.steps is not None else 3
        variant = ("fixed-speed" if "fixed" in args.variant else "variable-speed")
        dist = perms.enumerate_discrete(args.n, steps, variant)
        payload = {
            "n": args.n, "steps": steps, "variant": args.variant,
            "distribution": {
                "".join(map(str, state)) if args.n < 10 else str(state): str(p)
                for state, p in sorted(dist.items())
            },
        }
        _emit(payload, os.path.join(out, "exact_distribution.json"))
        return 0
    horizon = args.horizon if args.horizon is not None else (
        float(args.steps) if args.steps is not None else 2.5 * args.n)
    traj_times = tuple(np.linspace(0.0, horizon, args.traj_points)) if args.track else ()
    rec = swap_process.RecorderSpec(
        snapshot_times=tuple(s * args.n for s in args.snapshot_s),
        track_labels=tuple(args.track),
        trajectory_times=traj_times,
    )
    summaries = []
    for r in range(args.replicates):
        path = swap_process.simulate_variant(args.n, horizon, args.variant,
                                             args.seed, r, rec)
        summaries.append({
            "replicate": r,
            "absorbed": path.absorbed,
            "applied_events": path.applied_count,
            "beta_star": None if not np.all(np.isfinite(path.finish)) else path.beta_star,
        })
        if args.track:
            csv = os.path.join(out, f"trajectories_r{r}.csv")
            cols = []
            s_grid = path.trajectory_times / args.n
            for j, k in enumerate(path.track_labels):
                cols.append([np.full(s_grid.size, float(k)), s_grid,
                             path.trajectories[j] / args.n])
            harness.write_csv(csv, ["k", "s", "position"],
                              [np.concatenate([c[i] for c in cols]) for i in range(3)])
        if args.snapshot_s:
            csv = os.path.join(out, f"configuration_r{r}.csv")
            rows = []
            for s in args.snapshot_s:
                labels = path.snapshot_at(s * args.n)
                rows.append((np.full(args.n, s),
                             np.arange(1, args.n + 1) / args.n,
                             labels / args.n))
            harness.write_csv(csv, ["s", "x", "y"],
                              [np.concatenate([r_[i] for r_ in rows]) for i in range(3)])
    payload = {"n": args.n, "variant": args.variant, "horizon": horizon,
               "seed": args.seed, "replicates": summaries}
    _emit(payload, os.path.join(out, "simulate_summary.json"))
    return 0


def _cmd_tasep(args):
    out = _out_dir(args)
    results = []
    for r in range(args.replicates):
        if args.check_coupling:
            rep = coupling.coupling_check(args.n, args.k, args.horizon,
                                          args.seed, r)
            results.append({
                "replicate": r, "ok": rep.ok, "failure": rep.failure,
                "events": rep.events,
                "window": [rep.window_lo, rep.window_hi],
            })
            continue
        interval = None if args.infinite else (1, args.n)
        path = tasep.simulate_tasep(args.k, args.horizon, args.seed, r,
                                    interval=interval,
                                    snapshot_times=tuple(args.snapshot_t))
        results.append({
            "replicate": r, "window": [path.window_lo, path.window_hi],
            "retries": path.retries,
        })
        for t in args.snapshot_t:
            csv = os.path.join(out, f"density_r{r}_t{t}.csv")
            lo, hi = path.window_lo, path.window_hi
            xs = np.linspace(lo, hi, args.profile_points)
            qs = np.array([path.queue_length(t, int(x)) for x in xs], dtype=float)
            harness.write_csv(csv, ["t", "x", "queue_length"],
                              [np.full(xs.size, t), xs, qs])
    payload = {"k": args.k, "horizon": args.horizon, "seed": args.seed,
               "coupling_checked": bool(args.check_coupling), "runs": results}
    _emit(payload, os.path.join(out, "tasep_summary.json"))
    if args.check_coupling and not all(r["ok"] for r in results):
        return 2
    return 0


def _need(args, names):
    missing = [f"--{n}" for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--quantity {args.quantity} requires {', '.join(missing)}")


def _cmd_limits(args):
    q = args.quantity
    out = _out_dir(args)
    if args.grid:
        return _limits_grid(args, out)
    if q == "rost":
        _need(args, ["x"])
        val = {"h": limits.rost_profile(args.x)}
    elif q == "envelopes":
        _need(args, ["y", "s"])
        lo, hi, gam = limits.envelopes(args.y, args.s)
        val = {"lower": lo, "upper": hi, "gamma": gam}
    elif q == "phi":
        _need(args, ["y", "s", "u"])
        val = {"phi": limits.phi(args.y, args.s, args.u)}
    elif q == "lambda":
        _need(args, ["y", "s"])
        lm, lp = limits.lambda_pm(args.y, args.s)
        val = {"lambda_minus": lm, "lambda_plus": lp}
    elif q == "f":
        _need(args, ["s", "x", "y"])
        val = {"f": limits.density_f(args.s, args.x, args.y)}
    elif q == "F":
        _need(args, ["s", "u", "y"])
        val = {"F": limits.cumulative_F(args.s, args.u, args.y)}
    elif q == "kappa-cdf":
        _need(args, ["s", "x", "y"])
        val = {"kappa_cdf": limits.kappa_cdf(args.s, args.x, args.y)}
    elif q == "w":
        _need(args, ["s"])
        wm, wp = limits.w_pm(args.s)
        val = {"w_minus": wm, "w_plus": wp}
    elif q == "southeast":
        _need(args, ["s", "x", "y"])
        val = {"southeast": limits.southeast_prob(args.s, (args.x, args.y))}
    elif q == "inversion":
        _need(args, ["s"])
        val = {"inversion": limits.inversion_limit(args.s)}
    elif q == "tw-scaling":
        _need(args, ["y", "n"])
        sc = limits.tw_scaling(args.y, args.n)
        val = {"center": sc.center, "scale": sc.scale}
    elif q == "psi":
        _need(args, ["y", "s"])
        val = {"psi": limits.psi(args.y, args.s)}
    else:  # pragma: no cover
        raise UsageError(f"unhandled quantity {q}")
    _emit({"quantity": q, "value": val})
    return 0


def _limits_grid(args, out):
    grid = np.linspace(0.0, 1.0, args.grid)
    if args.quantity == "kappa-cdf":
        _need(args, ["s"])
        xs, ys = np.meshgrid(grid, grid, indexing="ij")
        vals = limits.kappa_cdf(args.s, xs, ys)
        csv = os.path.join(out, f"kappa_cdf_s{args.s}.csv")
        harness.write_csv(csv, ["x", "y", "mass"], [xs.ravel(), ys.ravel(), vals.ravel()])
    elif args.quantity == "inversion":
        s_grid = np.linspace(0.0, 2.5, args.grid)
        csv = os.path.join(out, "inversion_curve.csv")
        harness.write_csv(csv, ["s", "inversion"], [s_grid, limits.inversion_limit(s_grid)])
    elif args.quantity == "rost":
        x_grid = np.linspace(-2.0, 2.0, args.grid)
        csv = os.path.join(out, "rost_profile.csv")
        harness.write_csv(csv, ["x", "h"], [x_grid, limits.rost_profile(x_grid)])
    else:
        raise UsageError(f"--grid is not supported for quantity {args.quantity}")
    print(csv)
    return 0


def _cmd_tw(args):
    out = _out_dir(args)
    sol = tracy_widom.solve_painleve(x_start=args.x_start, x_min=args.x_min,
                                     step=args.step, scheme=args.scheme,
                                     init=args.init)
    zs = np.linspace(args.z_min, args.z_max, args.points)
    csv = os.path.join(out, "tracy_widom.csv")
    harness.write_csv(csv, ["z", "cdf"], [zs, sol.cdf(zs)])
    payload = {"table": csv, "residual": sol.residual()}
    if args.quantile:
        payload["quantiles"] = {str(p): sol.quantile(p) for p in args.quantile}
    _emit(payload, os.path.join(out, "tw_summary.json"))
    return 0


def _cmd_lpp(args):
    out = _out_dir(args)
    rows, cols = lpp.grid_shape(args.y, args.n)
    gs = lpp.lpp_times(rows, cols, args.seed, args.replicates)
    scaled = lpp.johansson_scaled(gs, args.y, args.n, rows=rows, cols=cols)
    csv = os.path.join(out, "lpp_scaled.csv")
    harness.write_csv(csv, ["scaled_value"], [np.sort(scaled)])
    _emit({"rows": rows, "cols": cols, "n": args.n, "y": args.y,
           "seed": args.seed, "replicates": args.replicates,
           "mean_over_cols": float(np.mean(gs) / cols), "table": csv},
          os.path.join(out, "lpp_summary.json"))
    return 0


_QUICK = {
    "identity-suite": dict(trials=500),
    "coupling-suite": dict(n=20, horizon=60.0, replicates=2),
    "hydro": dict(n=300),
    "inversions": dict(n=300, replicates=4),
    "finishing": dict(n=300, replicates=4),
    "trajectories": dict(n=300, k=90, replicates=60),
    "tw-fluct": dict(n=300, k=150, replicates=60,
                     tolerances={"tw-ks": 0.25, "cdf-agree": 0.25}),
    "lpp": dict(n=300, replicates=60),
}

_FULL = {
    "identity-suite": dict(trials=10_000),
    "coupling-suite": dict(n=50, horizon=200.0, replicates=20),
    "hydro": dict(n=1000),
    "inversions": dict(n=1000, replicates=20),
    "finishing": dict(n=1000, replicates=20),
    "trajectories": dict(n=1000, k=300, replicates=500,
                         tolerances={"second-class-replicates": 2000}),
    "tw-fluct": dict(n=2000, k=1000, replicates=500),
    "lpp": dict(n=2000, replicates=200),
}


def _cmd_verify(args):
    out = _out_dir(args)
    failed = False
    for kind in SUITES[args.suite]:
        params = dict(_QUICK[kind] if args.quick else _FULL[kind])
        if args.n:
            params["n"] = args.n
        params.setdefault("replicates", 1)
        exp = harness.Experiment(kind=kind, seed=args.seed,
                                 threads=args.threads, **params)
        report = harness.run_experiment(exp, out_dir=out)
        path = os.path.join(out, f"report_{kind}.json")
        harness.write_report(report, path)
        for v in report.verdicts:
            status = "pass" if v.passed else "FAIL"
            print(f"[{status}] {kind}/{v.name}: observed={v.observed:.6g} "
                  f"target={v.target:.6g} tol={v.tolerance:.6g}")
        failed = failed or not report.passed
    return 2 if failed else 0


def _cmd_report(args):
    out = _out_dir(args)
    merged = {"reports": [], "all_pass": True}
    for path in args.paths:
        with open(path) as fh:
            data = json.load(fh)
        merged["reports"].append(data)
        merged["all_pass"] = merged["all_pass"] and all(
            v["pass"] for v in data.get("verdicts", [])
        )
    _emit(merged, os.path.join(out, "combined_report.json"))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "tasep": _cmd_tasep,
    "limits": _cmd_limits,
    "tw": _cmd_tw,
    "lpp": _cmd_lpp,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        # config-file defaults: applied under explicit flags
        if "--config" in argv:
            idx = argv.index("--config")
            cfg_path = argv[idx + 1]
            with open(cfg_path) as fh:
                cfg = json.load(fh)
            defaults = []
            for key, val in cfg.items():
                flag = f"--{key.replace('_', '-')}"
                if flag not in argv:
                    if isinstance(val, bool):
                        if val:
                            defaults.append(flag)
                    elif isinstance(val, list):
                        defaults.append(flag)
                        defaults.extend(str(v) for v in val)
                    else:
                        defaults.extend([flag, str(val)])
            argv = argv[:idx] + argv[idx + 2 :] + defaults
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
