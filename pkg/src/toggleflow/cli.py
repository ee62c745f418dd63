"""Command-line front end: ``generate``, ``solve`` and ``bench``.

Exit codes: 0 on success, 1 on usage or input errors, 2 when a capped
solver stops before its iteration budget without stalling.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import generators
from .batched import batched_dual_kosz, default_batch
from .graph import GraphError, dual_objective, primal_energy, read_graph, read_supply, write_graph, write_supply
from .laplacian import dual_kosz, iteration_budget, kosz
from .pnorm import pnorm_cut_solve, pnorm_cycle_solve
from .recursive import RecursionParams, recursive_solve
from .tree import build_cut_table, low_stretch_tree

ALGOS = ("kosz", "dual-kosz", "batched", "recursive", "pnorm-cycle", "pnorm-cut")
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def thread_cap() -> int:
    """Worker cap from TOGGLEFLOW_THREADS (default 1)."""
    raw = os.environ.get("TOGGLEFLOW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"TOGGLEFLOW_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def run_solver(algo, G, b, args):
    """Dispatch one solve; returns (SolveResult, p)."""
    eps, seed = args.eps, args.seed
    if algo == "kosz":
        return kosz(G, b, eps, seed, track=bool(args.trace)), 2.0
    if algo == "dual-kosz":
        if args.batch:
            return batched_dual_kosz(G, b, eps, args.batch, seed, track=bool(args.trace)), 2.0
        return dual_kosz(G, b, eps, seed, naive=args.naive, track=bool(args.trace)), 2.0
    if algo == "batched":
        if args.batch == 0:
            return dual_kosz(G, b, eps, seed, naive=args.naive, track=bool(args.trace)), 2.0
        l = default_batch(G.m) if args.batch is None else args.batch
        return batched_dual_kosz(G, b, eps, l, seed, track=bool(args.trace)), 2.0
    if algo == "recursive":
        params = RecursionParams(
            n0=args.n0, gamma=args.gamma, eps_prime=args.eps_prime, delta=args.delta, c3=args.c3
        )
        return recursive_solve(G, b, eps, params, seed), 2.0
    kw = dict(max_iters=args.max_iters, tree_refresh=args.tree_refresh)
    if algo == "pnorm-cycle":
        return pnorm_cycle_solve(G, b, args.p, eps, seed, **kw), args.p
    if algo == "pnorm-cut":
        return pnorm_cut_solve(G, b, args.p, eps, seed, **kw), args.p
    raise UsageError(f"unknown algorithm {algo!r}")


def build_report(algo, G, b, res, p, oracle: bool):
    s, c = res.trace.summary, res.trace.config
    report = {
        "algo": algo,
        "n": G.n,
        "m": G.m,
        "tau": c.get("tau"),
        "K": c.get("K"),
        "iterations_run": s["iterations_run"],
        "final_energy": s["final_energy"],
        "final_dual": s["final_dual"],
        "gap": s["gap"],
        "wall_ms": s["wall_ms"],
    }
    if p != 2.0:
        report["p"] = p
    if "stopped" in s:
        report["stopped"] = s["stopped"]
    if oracle:
        from .oracles import electrical_flow, pnorm_oracle

        if p == 2.0:
            f_star, _ = electrical_flow(G, b)
        else:
            f_star = pnorm_oracle(G, b, p).f
        e_star = primal_energy(G, f_star, p)
        report["oracle_energy"] = e_star
        report["oracle_gap"] = (s["final_energy"] - e_star) / e_star if e_star > 0 else s["final_energy"]
    return report


def cmd_solve(args) -> int:
    if args.recursive:
        args.algo = "recursive"
    if args.algo is None:
        raise UsageError("--algo is required")
    if args.algo in ("pnorm-cycle", "pnorm-cut") and args.p is None:
        raise UsageError(f"--p is required for {args.algo}")
    if args.p is None:
        args.p = 2.0
    if args.algo not in ("pnorm-cycle", "pnorm-cut") and args.p != 2.0:
        raise UsageError(f"{args.algo} solves p = 2 only; use pnorm-cycle or pnorm-cut")
    if not 0.0 < args.eps < 1.0:
        raise UsageError("--eps must lie in (0, 1)")
    if args.batch is not None and args.batch < 0:
        raise UsageError("--batch must be >= 0")
    if args.tree_refresh < 1:
        raise UsageError("--tree-refresh must be >= 1")
    G = read_graph(args.graph)
    b = read_supply(args.supply, G.n)
    try:
        res, p = run_solver(args.algo, G, b, args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = build_report(args.algo, G, b, res, p, args.oracle)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.trace:
        with open(args.trace, "w") as fh:
            res.trace.to_jsonl(fh)
    if res.trace.summary.get("stopped") == "cap":
        print(f"{args.algo}: iteration cap reached before the budget", file=sys.stderr)
        return EXIT_NONCONVERGED
    return 0


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    try:
        G = generators.generate(args.kind, args.n, args.m, args.seed, args.rmax, args.degree)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.supply == "st":
        b = generators.st_supply(G.n)
    else:
        b = generators.random_supply(G.n, np.random.default_rng([args.seed, 1]))
    write_graph(args.out + ".graph", G)
    write_supply(args.out + ".supply", b)
    print(f"wrote {args.out}.graph (n={G.n}, m={G.m}) and {args.out}.supply")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ("n", "m", "l", "algo", "K", "wall_ms", "final_gap")


def _parse_sweep(spec: str):
    if ":" not in spec:
        raise UsageError("--sweep must look like 'l:1,sqrt,K' or 'n:8,16,32'")
    axis, values = spec.split(":", 1)
    if axis not in ("l", "n"):
        raise UsageError(f"unknown sweep axis {axis!r}; expected 'l' or 'n'")
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise UsageError("--sweep lists no values")
    return axis, vals


def _bench_one(job):
    """One timed run; the spanning tree is built before the clock starts."""
    kind, n, m, seed, rmax, algo, l, eps, iterations = job
    G = generators.generate(kind, n, m, seed, rmax)
    b = generators.st_supply(G.n)
    T = low_stretch_tree(G)
    start = time.perf_counter()
    if algo == "batched":
        res = batched_dual_kosz(G, b, eps, l, seed, tree=T, iterations=iterations)
    elif algo == "dual-kosz-naive":
        res = dual_kosz(G, b, eps, seed, tree=T, naive=True, iterations=iterations)
    elif algo == "dual-kosz":
        res = dual_kosz(G, b, eps, seed, tree=T, iterations=iterations)
    elif algo == "kosz":
        res = kosz(G, b, eps, seed, tree=T, iterations=iterations)
    else:
        raise UsageError(f"bench does not support {algo!r}")
    wall = 1000.0 * (time.perf_counter() - start)
    gap = primal_energy(G, res.f) - dual_objective(G, res.x, b)
    return {
        "n": G.n,
        "m": G.m,
        "l": l if algo == "batched" else 0,
        "algo": algo,
        "K": res.trace.config["K"],
        "wall_ms": round(wall, 3),
        "final_gap": gap,
    }


def _resolve_l(token, m, K):
    if token == "sqrt":
        return default_batch(m)
    if token == "K":
        return max(1, K)
    value = int(token)
    if value < 1:
        raise UsageError("batch sizes must be >= 1")
    return value


def bench_rows(args):
    axis, values = _parse_sweep(args.sweep)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    jobs = []
    if axis == "l":
        G = generators.generate(args.kind, args.n, args.m, args.seed, args.rmax)
        tau = build_cut_table(G, low_stretch_tree(G), generators.st_supply(G.n)).tau
        K = args.iterations or iteration_budget(tau, args.eps)
        for tok in values:
            jobs.append((args.kind, args.n, args.m, args.seed, args.rmax, "batched", _resolve_l(tok, G.m, K), args.eps, args.iterations))
        for algo in algos:
            if algo != "batched":
                jobs.append((args.kind, args.n, args.m, args.seed, args.rmax, algo, 0, args.eps, args.iterations))
    else:
        for tok in values:
            n = int(tok)
            # keep the base density m / n along the sweep
            m = None if args.m is None else int(round(args.m * n / args.n))
            G = generators.generate(args.kind, n, m, args.seed, args.rmax)
            for algo in algos:
                l = default_batch(G.m) if algo == "batched" else 0
                jobs.append((args.kind, n, m, args.seed, args.rmax, algo, l, args.eps, args.iterations))
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bench_one, jobs))
    return [_bench_one(j) for j in jobs]


def cmd_bench(args) -> int:
    rows = bench_rows(args)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toggleflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic graph and supply")
    g.add_argument("kind", choices=generators.KINDS)
    g.add_argument("--n", type=int, required=True, help="vertices (grid: side length)")
    g.add_argument("--m", type=int, help="edges (random-gnm; random-regular derives the degree)")
    g.add_argument("--degree", type=int, default=3, help="degree for random-regular")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rmax", type=float, default=1.0, help="resistances log-uniform in [1, rmax]")
    g.add_argument("--supply", choices=("st", "random"), default="st")
    g.add_argument("--out", required=True, help="output prefix; writes PREFIX.graph and PREFIX.supply")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one solver and emit a JSON report")
    s.add_argument("--algo", choices=ALGOS)
    s.add_argument("--graph", required=True)
    s.add_argument("--supply", required=True)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="report path (default stdout)")
    s.add_argument("--trace", help="JSON-lines trace path")
    s.add_argument("--oracle", action="store_true", help="compare against the exact optimum")
    s.add_argument("--batch", type=int, help="block size l; 0 runs unbatched (default ceil(sqrt(m)))")
    s.add_argument("--naive", action="store_true", help="O(m) cut-flow queries instead of the table")
    s.add_argument("--recursive", action="store_true", help="same as --algo recursive")
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--gamma", type=float, default=0.01)
    s.add_argument("--eps-prime", type=float, default=0.01)
    s.add_argument("--n0", type=int, default=10)
    s.add_argument("--c3", type=float, default=1.0)
    s.add_argument("--p", type=float)
    s.add_argument("--max-iters", type=int, default=1_000_000)
    s.add_argument("--tree-refresh", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    bch = sub.add_parser("bench", help="timing sweep written as CSV")
    bch.add_argument("--sweep", required=True, help="'l:1,sqrt,K' or 'n:8,16,32'")
    bch.add_argument("--kind", choices=generators.KINDS, default="grid")
    bch.add_argument("--n", type=int, default=10, help="base size (grid: side length)")
    bch.add_argument("--m", type=int)
    bch.add_argument("--rmax", type=float, default=1.0)
    bch.add_argument("--seed", type=int, default=0)
    bch.add_argument("--eps", type=float, default=0.1)
    bch.add_argument("--algos", default="batched", help="comma list: batched, dual-kosz, dual-kosz-naive, kosz")
    bch.add_argument("--iterations", type=int, help="fixed iteration count instead of the budget")
    bch.add_argument("--out", help="CSV path (default stdout)")
    bch.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; every parse error exits EXIT_USAGE
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        thread_cap()
        return args.func(args)
    except (UsageError, GraphError, OSError) as exc:
        print(f"toggleflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
