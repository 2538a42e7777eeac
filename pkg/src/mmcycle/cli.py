"""Command-line surface: solve edge-list files, generate benchmark
instances, and run the scaling / accuracy experiments as CSV.

Exit codes: 0 success, 2 no cycle in the input, 1 I/O or validation error.
The bench and sweep commands emit rows under the fixed header
n,m,d_tilde,solver,eps,eta,passes,wall_ms,err_vs_exact,seed; cells run in
parallel threads capped by the MMC_THREADS env var, and row order, seeds,
and every column except wall_ms are reproducible bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import bellman_ford, karp_mmc, reduction_demo
from .flows import Cycle
from .generators import gen_arbitrage_like, gen_pm1_complete, gen_random_sc
from .graph import (NoCycleError, NotStronglyConnectedError, adiam,
                    induced_subgraph, read_edge_list, scc_decompose,
                    write_edge_list)
from .solver_area import ammc_area
from .solver_bal import (BalSolverConfig, SolveReport, ammc_bal,
                         solve_all_components, sweep_eta)

CSV_HEADER = ["n", "m", "d_tilde", "solver", "eps", "eta", "passes",
              "wall_ms", "err_vs_exact", "seed"]


@dataclass(frozen=True)
class ExperimentSpec:
    """One bench run: generator sizes, solvers, accuracy grid, seeds, and
    the output path. Empty lists are rejected up front."""

    sizes: tuple[int, ...]
    solvers: tuple[str, ...]
    eps_list: tuple[float, ...]
    eta_list: tuple[float | None, ...]
    seeds: tuple[int, ...]
    out: str

    def __post_init__(self) -> None:
        for name in ("sizes", "solvers", "eps_list", "eta_list", "seeds"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        bad = set(self.solvers) - {"bal", "area", "karp"}
        if bad:
            raise ValueError(f"unknown solver(s): {sorted(bad)}")


@dataclass(frozen=True)
class BenchRecord:
    """One CSV row of the benchmark output."""

    n: int
    m: int
    d_tilde: int
    solver: str
    eps: float
    eta: float | None
    passes: float
    wall_ms: float
    err_vs_exact: float
    seed: int

    def row(self) -> list:
        eta = "" if self.eta is None or math.isnan(self.eta) else repr(self.eta)
        return [self.n, self.m, self.d_tilde, self.solver, repr(self.eps),
                eta, repr(self.passes), f"{self.wall_ms:.3f}",
                repr(self.err_vs_exact), self.seed]


def _karp_all_components(g):
    """Exact global MMC: Karp per strongly connected component with edges.
    Returns (mu, lifted Cycle, passes) or None on an acyclic graph. The pass
    count charges each component its n_sub scans of its own edges."""
    best = None
    passes = 0.0
    for comp in scc_decompose(g):
        sub, _, edge_ids = induced_subgraph(g, comp)
        if sub.m == 0:
            continue
        mu, cyc = karp_mmc(sub)
        passes += sub.n * (sub.m / g.m)
        if best is None or mu < best[0]:
            lifted = Cycle.from_edges(g, [int(edge_ids[e]) for e in cyc.edges])
            best = (mu, lifted)
    if best is None:
        return None
    return best[0], best[1], passes


def cmd_solve(args) -> int:
    try:
        g = read_edge_list(args.path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.solver == "karp":
        res = _karp_all_components(g)
        if res is None:
            print("no cycle")
            return 2
        mu, cyc, passes = res
        print(" ".join(str(v) for v in cyc.vertices))
        print(f"mean {mu!r}")
        print(f"passes {passes!r}")
        return 0
    cfg = BalSolverConfig(eps=args.eps, eta_override=args.eta,
                          seed=args.seed, memory_mode=args.memory_mode)
    if args.solver == "bal":
        solver = ammc_bal
    else:
        def solver(sub, c): return ammc_area(sub, c.eps)
    best, reports = solve_all_components(g, cfg, solver=solver)
    if best is None:
        capped = [r for r in reports if r.status == "cap_exceeded"]
        if capped:
            print(f"error: balancing cap exceeded at imbalance "
                  f"{capped[0].imbalance_achieved:.3g}", file=sys.stderr)
            return 1
        print("no cycle")
        return 2
    print(" ".join(str(v) for v in best.cycle.vertices))
    print(f"mean {best.mean_weight!r}")
    dual = min(r.dual_lower_bound for r in reports)
    if not math.isnan(dual):
        print(f"dual_lower_bound {dual!r}")
    print(f"passes {sum(r.passes for r in reports)!r}")
    return 0


def cmd_gen(args) -> int:
    if args.generator == "arbitrage":
        g, planted = gen_arbitrage_like(args.n, args.seed,
                                        delete_frac=args.delete_frac)
    else:
        g = gen_random_sc(args.n, args.extra, args.seed)
        planted = None
    try:
        write_edge_list(g, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if planted is not None:
        print(f"planted_mean {planted!r}")
    print(f"wrote {args.out}: n {g.n} m {g.m}")
    return 0


def _bench_cell(n: int, seed: int, spec: ExperimentSpec) -> list[BenchRecord]:
    g, _ = gen_arbitrage_like(n, seed, delete_frac=0.0)
    mu, _, _ = _karp_all_components(g)
    d_tilde = adiam(g).d_tilde
    records = []
    for solver in spec.solvers:
        for eps in spec.eps_list:
            for eta in spec.eta_list:
                if solver == "bal":
                    rep = ammc_bal(g, BalSolverConfig(
                        eps=eps, eta_override=eta, seed=seed))
                    rec = BenchRecord(n, g.m, rep.d_tilde, solver, eps,
                                      rep.eta, rep.passes, rep.wall_ms,
                                      rep.mean_weight - mu, seed)
                elif solver == "area":
                    rep = ammc_area(g, eps)
                    rec = BenchRecord(n, g.m, rep.d_tilde, solver, eps, None,
                                      rep.passes, rep.wall_ms,
                                      rep.mean_weight - mu, seed)
                else:
                    t0 = time.perf_counter()
                    mu2, _, passes = _karp_all_components(g)
                    rec = BenchRecord(n, g.m, d_tilde, solver, eps, None,
                                      passes, (time.perf_counter() - t0) * 1e3,
                                      mu2 - mu, seed)
                records.append(rec)
    return records


def _thread_cap() -> int:
    raw = os.environ.get("MMC_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)


def _write_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_HEADER)
        wr.writerows(rows)


def cmd_bench(args) -> int:
    try:
        spec = ExperimentSpec(
            sizes=tuple(_int_list(args.sizes)),
            solvers=tuple(args.solver.split(",")),
            eps_list=tuple(_float_list(args.eps)),
            eta_list=tuple(_float_list(args.eta)) if args.eta else (None,),
            seeds=tuple(_int_list(args.seeds)),
            out=args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cells = [(n, seed) for n in spec.sizes for seed in spec.seeds]
    with ThreadPoolExecutor(max_workers=_thread_cap()) as ex:
        futures = [ex.submit(_bench_cell, n, seed, spec) for n, seed in cells]
        rows = [rec.row() for fut in futures for rec in fut.result()]
    try:
        _write_csv(spec.out, rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {spec.out}: {len(rows)} rows")
    return 0


def cmd_sweep_eta(args) -> int:
    try:
        etas = _float_list(args.etas)
        seeds = _int_list(args.seeds)
        if not etas or not seeds:
            raise ValueError("etas and seeds must be nonempty")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    g, _ = gen_arbitrage_like(args.n, args.seed, delete_frac=0.0)
    d_tilde = adiam(g).d_tilde
    rows = []
    for r in sweep_eta(g, etas, args.budget, seeds):
        rows.append(BenchRecord(g.n, g.m, d_tilde, "bal", 0.0, r["eta"],
                                r["passes"], r["wall_ms"], r["err"],
                                r["seed"]).row())
    try:
        _write_csv(args.out, rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def cmd_reduce_demo(args) -> int:
    g = gen_pm1_complete(args.n, args.seed)
    dist_exact, _, neg = bellman_ford(g, 0)
    if neg:
        print("error: generator produced a negative cycle", file=sys.stderr)
        return 1
    stats: dict = {}
    dist = reduction_demo(g, args.eps, seed=args.seed, stats=stats)
    if np.array_equal(dist, dist_exact):
        print(f"ok: distances match bellman-ford on n={g.n} "
              f"(processed {stats['processed']} vertices, "
              f"min reduced weight {stats['min_reduced']:.3g})")
        return 0
    print("MISMATCH: reduction distances differ from bellman-ford",
          file=sys.stderr)
    return 1


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip() != ""]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip() != ""]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mmcycle",
        description="approximate minimum mean cycle solvers and benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an edge-list file")
    p.add_argument("path")
    p.add_argument("--solver", choices=["bal", "area", "karp"], default="bal")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--memory-mode", choices=["dense", "oracle"],
                   default="dense")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--generator", choices=["arbitrage", "random-sc"],
                   default="arbitrage")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--extra", type=int, default=16)
    p.add_argument("--delete-frac", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="scaling/accuracy benchmark to CSV")
    p.add_argument("--sizes", default="32,64")
    p.add_argument("--solver", default="bal")
    p.add_argument("--eps", default="0.1")
    p.add_argument("--eta", default="")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-eta", help="fixed-budget eta sweep to CSV")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--etas", default="8,16,32,64,128")
    p.add_argument("--budget", type=float, default=3000.0)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep_eta)

    p = sub.add_parser("reduce-demo",
                       help="shortest paths through the MMC reduction")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.1)
    p.set_defaults(func=cmd_reduce_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoCycleError:
        print("no cycle")
        return 2
    except (NotStronglyConnectedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
