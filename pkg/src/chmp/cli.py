"""``chmp`` command line: generate instances, solve, benchmark, LP feasibility,
classification.

Exit codes for ``solve``: 0 eps-solution, 2 witness or gap certificate
(p outside the hull), 3 iteration budget exhausted, 1 error. ``lpfeas`` uses
0 feasible, 2 infeasible, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .classifier import (
    LabeledPointSet,
    accuracy_report,
    blob_dataset,
    default_classify_config,
    load_idx_arrays,
    split_per_class,
)
from .geometry import InputError, build_query
from .instances import CASES, InstanceSpec, format_instance, generate, normalize_case, read_instance, write_instance
from .lpfeas import default_lp_config, gen_lp_instance, read_lp, solve_feasibility
from .solvers import SOLVERS, ConfigError, SolverConfig, default_eps, solve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OUTSIDE = 2
EXIT_EXHAUSTED = 3

BENCH_COLUMNS = ["case", "m", "n", "solver", "seed", "iterations", "outcome", "delta", "time_s"]
TRACE_COLUMNS = ["k", "delta", "delta_next", "sin_theta", "kind", "gamma", "lam"]
MONOTONE_SOLVERS = ("TA", "GT", "FW")


def _solver_name(s: str) -> str:
    name = s.strip().upper()
    if name not in SOLVERS:
        raise argparse.ArgumentTypeError(f"unknown solver {s!r}; choose from {', '.join(SOLVERS)}")
    return name


def _case_name(s: str) -> str:
    try:
        return normalize_case(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(s: str) -> List[int]:
    try:
        vals = [int(x) for x in s.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {s!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("need at least one positive integer")
    return vals


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (bench: seed base)")
    p.add_argument("--eps", type=float, default=None,
                   help="relative tolerance; default from CHMP_DEFAULT_EPS or 1e-4")
    p.add_argument("--maxit", type=int, default=None,
                   help="iteration cap; default min(max(1000 n, 10000), 1e6)")
    p.add_argument("--trace", action="store_true", help="record per-iteration traces")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="output file")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="chmp", description="Convex hull membership solvers and benchmarks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a generated instance")
    g.add_argument("--case", type=_case_name, required=True, help=f"one of {', '.join(CASES)}")
    g.add_argument("-m", type=int, default=100)
    g.add_argument("-n", type=int, default=1000)
    g.add_argument("--beta", type=float, default=0.9)
    g.add_argument("--dilation", type=float, default=0.0)

    s = sub.add_parser("solve", parents=[common], help="solve one instance file")
    s.add_argument("instance")
    s.add_argument("--solver", type=_solver_name, default="TA")
    s.add_argument("--pivot-policy", choices=("first", "random", "greedy"), default="random")
    s.add_argument("--json", action="store_true", help="print a JSON record instead of text")

    b = sub.add_parser("bench", parents=[common], help="solver sweep to CSV")
    b.add_argument("--case", type=_case_name, required=True)
    b.add_argument("-m", type=int, default=100)
    b.add_argument("-n", type=_int_list, default=[1000], help="comma-separated list")
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--solvers", default="TA,GT,ASFW,SPG",
                   type=lambda s: [_solver_name(x) for x in s.split(",") if x.strip()])
    b.add_argument("--pivot-policy", choices=("first", "random", "greedy"), default="random")

    lp = sub.add_parser("lpfeas", parents=[common], help="bounded LP feasibility via CHMP")
    lp.add_argument("--instance", help="LPF v1 file; omit to generate one")
    lp.add_argument("-m", type=int, default=50)
    lp.add_argument("-n", type=int, default=200)
    lp.add_argument("-N", type=float, default=1200.0, dest="N")
    lp.add_argument("--infeasible", action="store_true")
    lp.add_argument("--solver", type=_solver_name, default="SPG")

    c = sub.add_parser("classify", parents=[common], help="nearest-hull classification report")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--idx", nargs=4, metavar=("TRAIN_IMAGES", "TRAIN_LABELS", "TEST_IMAGES", "TEST_LABELS"))
    src.add_argument("--blobs", action="store_true", help="two separated Gaussian blobs in R^2")
    c.add_argument("--train-per-class", type=int, default=1000)
    c.add_argument("--test", type=int, default=200, help="number of test samples")
    c.add_argument("--solver", type=_solver_name, default="TA")
    c.add_argument("--summary", default=None, help="write per-class summary CSV here")
    return ap


# --------------------------------------------------------------------------
# helpers

def _config(args, **kw) -> SolverConfig:
    eps = args.eps if args.eps is not None else default_eps()
    return SolverConfig(eps=eps, maxit=args.maxit, seed=args.seed, trace=args.trace, **kw)


def _witness_or_delta(report) -> float:
    out = report.outcome
    return out.certificate.distance if out.kind == "witness" else out.delta


def _exit_for(kind: str) -> int:
    return {"epsilon": EXIT_OK, "witness": EXIT_OUTSIDE, "gap": EXIT_OUTSIDE,
            "projection": EXIT_OK, "exhausted": EXIT_EXHAUSTED}[kind]


def _write_trace(stream, trace) -> None:
    w = csv.writer(stream)
    w.writerow(TRACE_COLUMNS)
    for k, t in enumerate(trace):
        w.writerow([k, f"{t.delta:.17g}", f"{t.delta_next:.17g}", f"{t.sin_theta:.17g}",
                    t.kind, f"{t.gamma:.17g}", f"{t.lam:.17g}"])


def strictly_decreasing(trace) -> bool:
    return all(t.delta_next < t.delta for t in trace)


# --------------------------------------------------------------------------
# subcommands

def cmd_gen(args) -> int:
    spec = InstanceSpec(args.case, args.m, args.n, args.seed, args.beta, args.dilation)
    points, p = generate(spec)
    if args.out:
        write_instance(args.out, points, p)
    else:
        sys.stdout.write(format_instance(points, p))
    return EXIT_OK


def cmd_solve(args) -> int:
    points, p = read_instance(args.instance)
    q = build_query(points, p)
    cfg = _config(args, pivot_policy=args.pivot_policy)
    rep = solve(args.solver, points, q, cfg)
    record = {
        "solver": rep.solver,
        "outcome": rep.kind,
        "iterations": rep.iterations,
        "delta": _witness_or_delta(rep),
        "R": q.R,
        "eps": cfg.eps,
        "time_s": rep.wall_time,
    }
    if rep.kind == "witness":
        cert = rep.outcome.certificate
        record["offset"] = cert.offset
        record["normal"] = cert.normal.tolist()
    if args.json:
        print(json.dumps(record))
    else:
        label = {"epsilon": "eps-solution (p in conv A)", "witness": "witness (p not in conv A)",
                 "gap": "duality-gap certificate (p not in conv A)", "exhausted": "iteration budget exhausted",
                 "projection": "projection"}[rep.kind]
        dist = "witness distance" if rep.kind == "witness" else "delta"
        print(f"solver      {rep.solver}")
        print(f"outcome     {label}")
        print(f"iterations  {rep.iterations}")
        print(f"{dist:<11} {record['delta']:.6e}  (eps R = {cfg.eps * q.R:.3e})")
        print(f"time        {rep.wall_time:.4f} s")
    if args.out:
        Path(args.out).write_text(json.dumps(record) + "\n")
    if args.trace and rep.trace is not None:
        if args.out:
            with open(f"{args.out}.trace.csv", "w", newline="") as fh:
                _write_trace(fh, rep.trace)
        else:
            _write_trace(sys.stdout, rep.trace)
    return _exit_for(rep.kind)


def _bench_task(task):
    case, m, n, seed, solvers, eps, maxit, trace, policy = task
    points, p = generate(InstanceSpec(case, m, n, seed))
    q = build_query(points, p)
    rows = []
    for name in solvers:
        cfg = SolverConfig(eps=eps, maxit=maxit, seed=seed, trace=trace, pivot_policy=policy)
        rep = solve(name, points, q, cfg)
        row = {
            "case": case, "m": m, "n": n, "solver": name, "seed": seed,
            "iterations": rep.iterations, "outcome": rep.kind,
            "delta": f"{_witness_or_delta(rep):.9e}", "time_s": f"{rep.wall_time:.6f}",
        }
        if trace:
            row["monotone"] = int(strictly_decreasing(rep.trace)) if name in MONOTONE_SOLVERS else ""
        rows.append(row)
    return rows


def bench_rows(case, m, ns, reps, solvers, eps, seed_base=0, maxit=None, trace=False,
               jobs=1, pivot_policy="random"):
    """Rows for ``reps`` instances per ``n``; instance ``i`` uses seed ``seed_base + i``."""
    tasks = [(case, m, n, seed_base + i, tuple(solvers), eps, maxit, trace, pivot_policy)
             for n in ns for i in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_bench_task, tasks))
    else:
        chunks = [_bench_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    eps = args.eps if args.eps is not None else default_eps()
    rows = bench_rows(args.case, args.m, args.n, args.reps, args.solvers, eps, args.seed,
                      args.maxit, args.trace, args.jobs, args.pivot_policy)
    cols = BENCH_COLUMNS + (["monotone"] if args.trace else [])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    if args.trace and any(r.get("monotone") == 0 for r in rows):
        print("warning: a TA/GT/FW run did not decrease delta at every step", file=sys.stderr)
    return EXIT_OK


def cmd_lpfeas(args) -> int:
    if args.instance:
        lp = read_lp(args.instance)
    else:
        lp = gen_lp_instance(args.m, args.n, feasible=not args.infeasible, N=args.N, seed=args.seed)
    eps = args.eps if args.eps is not None else 1e-6
    cfg = default_lp_config(eps, seed=args.seed, trace=args.trace,
                            **({"maxit": args.maxit} if args.maxit else {}))
    verdict = solve_feasibility(lp, args.solver, eps, cfg)
    rep = verdict.report
    record = {"verdict": verdict.kind, "solver": rep.solver, "iterations": rep.iterations,
              "time_s": rep.wall_time, "m": lp.m, "n": lp.n, "N": lp.N}
    if verdict.kind == "feasible":
        record.update(residual=verdict.residual, bound=verdict.bound)
    elif verdict.kind == "infeasible":
        record.update(witness_distance=verdict.certificate.distance)
    else:
        record.update(reason=verdict.reason)
    print(json.dumps(record))
    if args.out:
        if verdict.kind == "feasible":
            np.savetxt(args.out, verdict.x)
        else:
            Path(args.out).write_text(json.dumps(record) + "\n")
    return {"feasible": EXIT_OK, "infeasible": EXIT_OUTSIDE}.get(verdict.kind, EXIT_EXHAUSTED)


def cmd_classify(args) -> int:
    if args.blobs:
        X, y = blob_dataset(n_per_class=args.train_per_class + args.test, seed=args.seed)
        (Xtr, ytr), test = split_per_class(X, y, args.train_per_class, args.test, args.seed)
    else:
        Xtr, ytr = load_idx_arrays(args.idx[0], args.idx[1])
        Xte, yte = load_idx_arrays(args.idx[2], args.idx[3])
        (Xtr, ytr), _ = split_per_class(Xtr, ytr, args.train_per_class, 0, args.seed)
        (_, _), test = split_per_class(Xte, yte, 0, args.test, args.seed)
    train = LabeledPointSet.from_arrays(Xtr, ytr)
    eps = args.eps if args.eps is not None else default_eps()
    cfg = default_classify_config(eps, maxit=args.maxit, seed=args.seed)
    rep = accuracy_report(train, test, args.solver, eps, cfg, jobs=args.jobs)
    if args.out:
        rep.write_predictions(args.out)
    if args.summary:
        rep.write_summary(args.summary)
    print(f"solver {rep.solver}  train {train.size()}  test {len(rep.rows)}  "
          f"accuracy {rep.accuracy:.4f}  time {rep.wall_time:.2f} s  kinds {rep.kinds}")
    for lab, n, hit, acc in rep.per_class():
        print(f"  class {lab}: {hit}/{n} ({acc:.3f})")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench,
            "lpfeas": cmd_lpfeas, "classify": cmd_classify}


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (OSError, InputError, ConfigError, ValueError, ArithmeticError) as exc:
        print(f"chmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
