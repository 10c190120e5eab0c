"""Command line front end: ``catfix verify | solve | plot-data``.

Exit codes: 0 pass / converged / divergent, 1 verification or audit failure,
2 usage or configuration error, 3 inconclusive (solver budget exhausted).
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import lemma_lab as lab
from . import rtree
from .errors import AuditError, CatfixError, ConfigError, ConvergenceError, TreeFormatError
from .fixpoint import TRACE_COLUMNS, solve, write_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

# fixed order: campaign i always draws child seed i, whatever subset is run
CAMPAIGNS = ("lemma31", "lemma32", "remark33", "prop34", "cat", "busemann", "step34")


def _campaign_seeds(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(CAMPAIGNS))
    return {name: int(c.generate_state(1, dtype=np.uint64)[0]) for name, c in zip(CAMPAIGNS, children)}


def run_campaign(name: str, seed: int, opts: dict) -> list:
    """Run one campaign; returns its reports (picklable, for the worker pool)."""
    rng = np.random.default_rng(seed)
    samples = opts.get("samples")
    space = opts.get("space", "hyperbolic")
    try:
        tree = rtree.load_tree(opts["tree"]) if opts.get("tree") else None
    except OSError as exc:
        raise ConfigError(f"cannot read tree file: {exc}") from None
    if name == "lemma31":
        return [lab.lemma31_campaign(samples or 100_000, rng),
                lab.lemma31_sweep(math.pi / 3, 1.0),
                lab.lemma31_growth(math.pi / 2, 1.0)]
    if name == "lemma32":
        n = np.arange(1, int(min(50, opts.get("h_max", 50))) + 1, dtype=float)
        return [lab.lemma32_collapse(n, 1.0 / n),
                lab.lemma32_grid_campaign(opts.get("h_max", 300.0), rng, samples or 10_000)]
    if name == "remark33":
        return [lab.remark33_counterexample()]
    if name == "prop34":
        return [lab.prop34_campaign(1.0, trials=samples or 100_000, rng=rng)]
    if name == "cat":
        default = 100_000 if space == "hyperbolic" else 1000
        return [lab.cat_campaign(space, samples or default, rng, tree=tree)]
    if name == "busemann":
        return [lab.busemann_campaign(space, samples or 500, rng, tree=tree)]
    if name == "step34":
        return [lab.step34_campaign(samples or 200, rng)]
    raise ConfigError(f"unknown campaign {name!r}")


def cmd_verify(args) -> int:
    names = args.campaigns or list(CAMPAIGNS)
    for n in names:
        if n not in CAMPAIGNS:
            raise ConfigError(f"unknown campaign {n!r}; choose from {', '.join(CAMPAIGNS)}")
    overrides = {}
    seed = args.seed
    if args.config:
        from .scenario import load_verify_config
        overrides = load_verify_config(args.config)
        if seed is None:
            seed = overrides.get("seed", 0)
    seed = 0 if seed is None else seed
    seeds = _campaign_seeds(seed)
    jobs = []
    for n in names:
        opts = dict(overrides.get(n, {}))
        for key in ("samples", "h_max", "space", "tree"):
            v = getattr(args, key, None)
            if v is not None:
                opts[key] = v
        jobs.append((n, seeds[n], opts))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(run_campaign, *zip(*jobs)))
    else:
        results = [run_campaign(*j) for j in jobs]
    # single writer, canonical order
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines, ok = [f"seed = {seed}"], True
    for (name, _, opts), reports in zip(jobs, results):
        for rep in reports:
            tag = f"_{opts.get('space', 'hyperbolic')}" if name in ("cat", "busemann") else ""
            rep.write_csv(out / f"{rep.name}{tag}.csv")
            lines.extend(rep.summary_lines())
            ok &= rep.ok
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> int:
    from .scenario import load_scenario
    sc = load_scenario(args.scenario)
    cfg = sc.config
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget is not None:
        cfg.max_outer = args.budget
    try:
        res = solve(sc.space, sc.K, sc.T, cfg)
    except AuditError as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        if exc.worst is not None:
            print(f"  witness: {exc.worst}", file=sys.stderr)
        return EXIT_FAIL
    except ConvergenceError as exc:
        print(f"inner solver failure: {exc}; diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", res.runs)
    with open(out / "iterates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "round", "point"])
        n = 0
        for r, run in enumerate(res.runs):
            for z in run.iterates:
                n += 1
                w.writerow([n, r, sc.space.fmt(z)])
    lines = [f"verdict: {res.verdict}", f"outer_iterations: {res.outer_iterations}",
             f"rounds: {len(res.runs)}"]
    if res.verdict == "converged":
        lines += [f"point: {sc.space.fmt(res.point)}", f"residual: {res.residual:.17g}"]
    elif res.verdict == "divergent":
        wt = res.witness
        lines += [f"ray_origin: {sc.space.fmt(wt.origin)}", f"ray_guide: {sc.space.fmt(wt.guide)}",
                  f"guide_distance: {wt.probe:.17g}", f"chord_length: {wt.length:.17g}",
                  f"chord_spread: {wt.spread:.17g}"]
    else:
        if res.point is not None:
            lines += [f"best_point: {sc.space.fmt(res.point)}", f"best_residual: {res.residual:.17g}"]
    (out / "result.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_INCONCLUSIVE if res.verdict == "unknown" else EXIT_OK


def _read_trace(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read trace: {exc}") from None
    if not rows or rows[0] != TRACE_COLUMNS:
        raise ConfigError(f"trace header must be {','.join(TRACE_COLUMNS)}", 1)
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(TRACE_COLUMNS):
            raise ConfigError(f"expected {len(TRACE_COLUMNS)} fields, got {len(row)}", i)
        try:
            out.append((int(row[0]), float(row[2]), float(row[3])))
        except ValueError:
            raise ConfigError("non-numeric field", i) from None
    return out


def cmd_plot_data(args) -> int:
    rows = _read_trace(args.trace)
    if args.iterates and not Path(args.iterates).is_file():
        raise ConfigError(f"cannot read iterates: no such file {args.iterates!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "residual_series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "residual"])
        w.writerows([n, f"{r:.17g}"] for n, _, r in rows)
    with open(out / "anchor_distance_series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "anchor_dist"])
        w.writerows([n, f"{d:.17g}"] for n, d, _ in rows)
    if args.iterates:
        # display only: hyperboloid (x1, x2, x3) -> disk (x1, x2) / (1 + x3)
        with open(args.iterates, newline="") as fh, \
                open(out / "disk_trajectory.csv", "w", newline="") as dst:
            rd = csv.reader(fh)
            head = next(rd, None)
            if head != ["n", "round", "point"]:
                raise ConfigError("iterates header must be n,round,point", 1)
            w = csv.writer(dst, lineterminator="\n")
            w.writerow(["n", "round", "u", "v"])
            for i, row in enumerate(rd, start=2):
                try:
                    x = [float(v) for v in row[2].split()]
                except (ValueError, IndexError):
                    raise ConfigError("iterate is not a list of coordinates", i) from None
                if len(x) != 3:
                    raise ConfigError("disk chart needs H^2 points (3 coordinates)", i)
                w.writerow([row[0], row[1], f"{x[0] / (1 + x[2]):.17g}", f"{x[1] / (1 + x[2]):.17g}"])
    print(f"wrote plot series for {len(rows)} trace rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catfix", description="Fixed points and comparison-geometry checks on CAT(-1) spaces.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run numerical verification campaigns")
    v.add_argument("campaigns", nargs="*", metavar="CAMPAIGN",
                   help=f"subset of: {', '.join(CAMPAIGNS)} (default: all)")
    v.add_argument("--config", help="YAML file with per-campaign overrides")
    v.add_argument("--seed", type=int, help="base seed (default 0)")
    v.add_argument("--out", default="reports", help="output directory")
    v.add_argument("--samples", type=int, help="trial count override")
    v.add_argument("--h-max", dest="h_max", type=float, help="largest h for lemma32")
    v.add_argument("--space", choices=("hyperbolic", "tree"), help="space for cat / busemann")
    v.add_argument("--tree", help="tree file for --space tree")
    v.add_argument("--jobs", type=int, default=1, help="worker processes")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="run the fixed-point solver on a scenario")
    s.add_argument("--scenario", required=True, help="scenario YAML file")
    s.add_argument("--seed", type=int, help="overrides the scenario seed (audit sampling)")
    s.add_argument("--budget", type=int, help="outer iteration budget")
    s.add_argument("--out", default="solve_out", help="output directory")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("plot-data", help="turn a solver trace into plot series")
    d.add_argument("trace", help="trace.csv written by solve")
    d.add_argument("--iterates", help="iterates.csv from the same run (H^2 only)")
    d.add_argument("--out", default="plot_data", help="output directory")
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    for key in ("seed", "samples", "budget"):
        val = getattr(args, key, None)
        if val is not None and val < 0:
            print(f"error: --{key} must be nonnegative", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, TreeFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CatfixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
