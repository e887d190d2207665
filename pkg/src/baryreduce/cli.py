"""Command-line entry point: solve, reduce, coreset, gen, sweep.

All output is machine-readable (JSON by default, CSV on request) and fully
determined by ``--seed``; wall-clock fields are suppressed by
``--no-timing`` so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv as _csv
import json
import sys

import numpy as np

from .core import BaryError, NumericalFailure
from .barycenter import SolverOptions, solve_barycenter
from .coreset import (
    build_coreset,
    evaluate_coreset,
    sensitivity_upper_bounds,
)
from .instances import (
    gen_coreset_synthetic,
    gen_lb_barycenter,
    gen_ot_pair,
    gen_pullback,
    load_csv_distributions,
)
from .projection import (
    MAP_MAKERS,
    cost_ratio_sweep,
    identity_map,
    jl_dimension,
    reduce_solve_reconstruct,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _emit(payload: dict, args) -> None:
    if getattr(args, "no_timing", False):
        payload = {k: v for k, v in payload.items() if not k.startswith("time")}
        if "rows" in payload and isinstance(payload["rows"], list):
            payload["rows"] = [
                {k: v for k, v in row.items() if "time" not in k}
                for row in payload["rows"]
            ]
        payload.pop("reference_time", None)
    if args.format == "csv" and "rows" in payload:
        rows = payload["rows"]
        out = sys.stdout if args.output is None else open(args.output, "w", newline="")
        try:
            writer = _csv.DictWriter(out, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (json.dumps(v) if isinstance(v, list) else v)
                                 for k, v in row.items()})
        finally:
            if out is not sys.stdout:
                out.close()
        return
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output is None:
        print(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")


def _solver_options(args, support_size=None) -> SolverOptions:
    return SolverOptions(
        support_size=support_size or args.support_size,
        p=args.p,
        seed=args.seed,
    )


def cmd_barycenter(args) -> int:
    mus = load_csv_distributions(args.input)
    nu, sol, report = solve_barycenter(mus, _solver_options(args))
    _emit({
        "cost": report.total_cost,
        "iterations": report.iterations,
        "support": nu.atoms.tolist(),
        "weights": nu.weights.tolist(),
        "trace": list(report.trace),
    }, args)
    return EXIT_OK


def _resolve_map(args, mus):
    d = mus[0].dim
    n_pooled = sum(mu.size for mu in mus)
    if args.dim is not None:
        m = args.dim
    else:
        m = jl_dimension(n_pooled, args.eps, args.delta, args.p,
                         policy=args.policy, k=len(mus))
    if m == d:
        return identity_map(d), m
    return MAP_MAKERS[args.map](d, m, args.seed), m


def cmd_reduce(args) -> int:
    mus = load_csv_distributions(args.input)
    pmap, m = _resolve_map(args, mus)
    res = reduce_solve_reconstruct(mus, pmap, _solver_options(args))
    _emit({
        "cost_low": res.cost_low,
        "cost_high": res.cost_high,
        "m": m,
        "map": pmap.kind,
        "support": res.nu_high.atoms.tolist(),
        "weights": res.nu_high.weights.tolist(),
        "time_project": res.time_project,
        "time_solve": res.time_solve,
        "time_reconstruct": res.time_reconstruct,
    }, args)
    return EXIT_OK


def cmd_coreset(args) -> int:
    if args.input is not None:
        mus = load_csv_distributions(args.input)
    else:
        mus = gen_coreset_synthetic(args.k)
    if args.sizes is None or min(args.sizes) < 1:
        raise BaryError("need positive --sizes")
    queries = []
    d = mus[0].dim
    for x in args.queries or [0.0]:
        from .core import make_distribution
        atom = np.full((1, d), float(x))
        queries.append(make_distribution(atom, np.array([1.0])))
    scores = sensitivity_upper_bounds(mus, p=args.p, pilot=mus[0]
                                      if args.input is None else None)
    k = len(mus)
    rows = []
    for size in args.sizes:
        for method in ("uniform", "sensitivity"):
            if method == "uniform":
                from .coreset import SensitivityScores
                flat = np.full(k, 1.0 / k)
                sc = SensitivityScores(flat, 1.0, flat, scores.pilot_cost,
                                       scores.degenerate)
            else:
                sc = scores
            core = build_coreset(sc, size, seed=args.seed)
            for qi, nu in enumerate(queries):
                ev = evaluate_coreset(core, mus, nu, args.p)
                rows.append({
                    "method": method, "size": int(size),
                    "query": float((args.queries or [0.0])[qi]),
                    "rel_error": ev["rel_error"],
                    "zero_cost": ev["zero_cost"],
                })
    _emit({"k": k, "rows": rows}, args)
    return EXIT_OK


def cmd_gen(args) -> int:
    rows = []
    if args.kind == "ot_pair":
        A, B, M = gen_ot_pair(args.d)
        for side, pts in (("A", A), ("B", B)):
            for pt in pts:
                rows.append({"set": side, "coords": pt.tolist()})
        meta = {"kind": "ot_pair", "d": args.d, "M": M}
    elif args.kind == "pullback":
        A, B, M = gen_pullback(args.d, args.C)
        for side, pts in (("A", A), ("B", B)):
            for pt in pts:
                rows.append({"set": side, "coords": pt.tolist()})
        meta = {"kind": "pullback", "d": args.d, "C": args.C, "M": M}
    elif args.kind == "lb_barycenter":
        mus, opt, n = gen_lb_barycenter(args.t, args.N, args.C, args.eps, args.p)
        for i, mu in enumerate(mus):
            for w, atom in zip(mu.weights, mu.atoms):
                rows.append({"set": str(i), "weight": float(w),
                             "coords": atom.tolist()})
        meta = {"kind": "lb_barycenter", "expected_opt_cost": opt, "n": n}
    else:  # coreset_synthetic
        mus = gen_coreset_synthetic(args.k)
        for i, mu in enumerate(mus):
            rows.append({"set": str(i), "coords": mu.atoms[0].tolist()})
        meta = {"kind": "coreset_synthetic", "k": args.k}
    _emit({**meta, "rows": rows}, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.trials < 1:
        raise BaryError("need --trials >= 1")
    mus = load_csv_distributions(args.input)
    opts = _solver_options(args)
    result = cost_ratio_sweep(mus, args.m_values, opts, map_kind=args.map,
                              trials=args.trials, master_seed=args.seed,
                              jobs=args.jobs)
    rows = [{
        "m": row["m"],
        "mean_ratio": row["mean_ratio"],
        "max_ratio": row["max_ratio"],
        "stddev": float(np.std(row["ratios"])),
        "mean_time": row["mean_time"],
    } for row in result["rows"]]
    _emit({"reference_cost": result["reference_cost"],
           "reference_time": result["reference_time"], "rows": rows}, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="baryreduce")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--p", type=float, default=2.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", default=None)
        p.add_argument("--no-timing", action="store_true", dest="no_timing")

    b = sub.add_parser("barycenter", help="solve for a fixed-size barycenter")
    b.add_argument("--input", required=True)
    b.add_argument("--support-size", type=int, default=4)
    common(b)
    b.set_defaults(func=cmd_barycenter)

    r = sub.add_parser("reduce", help="project, solve low-dim, lift back")
    r.add_argument("--input", required=True)
    r.add_argument("--support-size", type=int, default=4)
    r.add_argument("--eps", type=float, default=0.25)
    r.add_argument("--delta", type=float, default=0.1)
    group = r.add_mutually_exclusive_group()
    group.add_argument("--dim", type=int, default=None)
    group.add_argument("--policy", choices=("p2", "kirszbraun", "optimal"),
                       default="optimal")
    r.add_argument("--map", choices=tuple(MAP_MAKERS), default="gaussian")
    common(r)
    r.set_defaults(func=cmd_reduce)

    c = sub.add_parser("coreset", help="importance-sampling error table")
    c.add_argument("--input", default=None)
    c.add_argument("--k", type=int, default=1000)
    c.add_argument("--sizes", type=int, nargs="+", default=[10, 100])
    c.add_argument("--queries", type=float, nargs="+", default=[0.0, 10.0])
    common(c)
    c.set_defaults(func=cmd_coreset)

    g = sub.add_parser("gen", help="write a synthetic instance")
    g.add_argument("kind", choices=("ot_pair", "pullback", "lb_barycenter",
                                    "coreset_synthetic"))
    g.add_argument("--d", type=int, default=4)
    g.add_argument("--C", type=int, default=2)
    g.add_argument("--t", type=int, default=2)
    g.add_argument("--N", type=float, default=10.0)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--k", type=int, default=10)
    common(g)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sweep", help="cost-ratio curve over target dimensions")
    s.add_argument("--input", required=True)
    s.add_argument("--support-size", type=int, default=4)
    s.add_argument("--m-values", type=int, nargs="+", required=True)
    s.add_argument("--trials", type=int, default=5)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--map", choices=tuple(MAP_MAKERS), default="gaussian")
    common(s)
    s.set_defaults(func=cmd_sweep)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (BaryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
