"""Time the compiled and pure-numpy kernel backends on the same workload.

Each backend runs in its own subprocess because MMC_BACKEND is read at
import time. Usage:

    python3 benchmarks/compare_backends.py [--repeats 3]

Prints one row per case with the median wall time under each backend and
whether the returned means agree bit for bit.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

CASES = [
    ("bal complete n=64", "bal", dict(n=64, eps=0.1, mode="dense")),
    ("bal sparse n=512 oracle", "bal_sparse", dict(n=512, eps=0.5,
                                                   mode="oracle")),
    ("area complete n=16", "area", dict(n=16, eps=0.25)),
    ("karp complete n=64", "karp", dict(n=64)),
]


def run_case(kind: str, params: dict, repeats: int) -> dict:
    from mmcycle.generators import gen_arbitrage_like, gen_random_sc
    from mmcycle.baselines import karp_mmc
    from mmcycle.solver_area import ammc_area
    from mmcycle.solver_bal import BalSolverConfig, ammc_bal

    if kind == "bal_sparse":
        g = gen_random_sc(params["n"], 3 * params["n"], seed=params["n"])
    else:
        g, _ = gen_arbitrage_like(params["n"], 0, delete_frac=0.0)

    def solve():
        if kind == "karp":
            return karp_mmc(g)[0]
        if kind == "area":
            return ammc_area(g, params["eps"]).mean_weight
        cfg = BalSolverConfig(eps=params["eps"], seed=0,
                              memory_mode=params["mode"])
        return ammc_bal(g, cfg).mean_weight

    solve()  # warm the jit cache so compile time is not measured
    times, mean = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        mean = solve()
        times.append((time.perf_counter() - t0) * 1e3)
    times.sort()
    return {"mean": mean, "ms": times[len(times) // 2]}


def worker(repeats: int) -> None:
    out = {}
    for label, kind, params in CASES:
        out[label] = run_case(kind, params, repeats)
    json.dump(out, sys.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeats)
        return 0
    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, MMC_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(f"{backend} backend unavailable:\n{proc.stderr.strip()}",
                  file=sys.stderr)
            return 1
        results[backend] = json.loads(proc.stdout)
    width = max(len(label) for label, _, _ in CASES)
    print(f"{'case':<{width}}  {'numba ms':>9}  {'numpy ms':>9}  "
          f"{'speedup':>7}  same")
    for label, _, _ in CASES:
        nb, np_ = results["numba"][label], results["numpy"][label]
        same = "yes" if nb["mean"] == np_["mean"] else "NO"
        print(f"{label:<{width}}  {nb['ms']:>9.2f}  {np_['ms']:>9.2f}  "
              f"{np_['ms'] / max(nb['ms'], 1e-9):>6.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
