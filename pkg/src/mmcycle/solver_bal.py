"""End-to-end min-mean-cycle approximation through matrix balancing.

ammc_bal picks eta = 2.5 log(m) / eps and delta = eps / (16 w_max d~),
balances K = exp(-eta W) with random Osborne steps, reads off the balanced
flow P = A / sum(A), and rounds it to a cycle whose mean is at most
<P, W> <= mu(G) + eps. The dense mode materializes P; the oracle mode keeps
only O(n) auxiliary entries and recomputes P per edge during rounding.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .balancing import (BalanceProblem, OsborneCapExceeded, balance_summary,
                        build_balanced_flow, random_osborne)
from .baselines import karp_mmc
from .flows import Cycle, lp_cost
from .graph import (NULL_METER, NoCycleError, WeightedDigraph, adiam,
                    find_any_cycle_edges, induced_subgraph, scc_decompose,
                    sp_tree_pair)
from .rounding import round_cycle, round_qcirc, round_qcirc_oracle

#: eta = ETA_COEFF * log(m) / eps unless overridden
ETA_COEFF = 2.5
#: delta = eps / (DELTA_DENOM * w_max * d~)
DELTA_DENOM = 16.0


class AllocMeter:
    """Auxiliary-allocation counter with the meter interface the numeric
    stages expect. Tracks live entries (arrays handed out are never
    released), the peak including transients, and the running total."""

    def __init__(self) -> None:
        self.current = 0
        self.peak = 0
        self.total = 0

    def array(self, size: int, dtype=np.float64, fill=None) -> np.ndarray:
        self.current += size
        self.total += size
        if self.current > self.peak:
            self.peak = self.current
        if fill is None:
            return np.empty(size, dtype=dtype)
        return np.full(size, fill, dtype=dtype)

    def transient(self, size: int) -> None:
        self.total += size
        if self.current + size > self.peak:
            self.peak = self.current + size


@dataclass(frozen=True)
class BalSolverConfig:
    """Solver knobs: target accuracy eps, optional eta override (for the
    eta-sweep experiment), RNG seed, and dense | oracle memory mode."""

    eps: float
    eta_override: float | None = None
    seed: int = 0
    memory_mode: str = "dense"

    def __post_init__(self) -> None:
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.memory_mode not in ("dense", "oracle"):
            raise ValueError("memory_mode must be dense or oracle")


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve: the cycle (None when only a diagnostic could be
    produced), its mean weight, the balancing imbalance actually reached,
    step and pass counts, wall time, and the dual lower bound -log(sum A)/eta,
    which never exceeds the returned mean."""

    cycle: Cycle | None
    mean_weight: float
    imbalance_achieved: float
    steps: int
    passes: float
    wall_ms: float
    dual_lower_bound: float
    eta: float
    delta: float
    d_tilde: int
    status: str
    memory_peak_entries: int


def _any_cycle_report(g: WeightedDigraph, t0: float, meter: AllocMeter) -> SolveReport:
    edges = find_any_cycle_edges(g)
    if edges is None:
        raise NoCycleError("graph has no cycle")
    cyc = Cycle.from_edges(g, edges)
    return SolveReport(
        cycle=cyc, mean_weight=cyc.mean_weight, imbalance_achieved=0.0,
        steps=0, passes=0.0,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        dual_lower_bound=-g.w_max, eta=math.nan, delta=math.nan, d_tilde=-1,
        status="any_cycle", memory_peak_entries=meter.peak)


def ammc_bal(g: WeightedDigraph, cfg: BalSolverConfig) -> SolveReport:
    """Approximate MMC on a strongly connected graph: the returned cycle
    satisfies mu(G) <= mean <= mu(G) + eps.

    When eps > 2 w_max every cycle already qualifies (all means lie in
    [-w_max, w_max]), so a single DFS supplies the answer. A balancing
    iteration-cap overrun yields a partial report with status cap_exceeded
    and no cycle.
    """
    t0 = time.perf_counter()
    meter = AllocMeter()
    if cfg.eps > 2.0 * g.w_max:
        return _any_cycle_report(g, t0, meter)
    d_tilde = adiam(g, meter=meter).d_tilde
    d_eff = max(d_tilde, 1)
    eta = (cfg.eta_override if cfg.eta_override is not None
           else ETA_COEFF * math.log(max(g.m, 2)) / cfg.eps)
    delta = cfg.eps / (DELTA_DENOM * g.w_max * d_eff)
    prob = BalanceProblem(g, eta, delta)
    ostats: dict = {}
    try:
        pot = random_osborne(prob, cfg.seed, meter=meter, stats=ostats)
    except OsborneCapExceeded as exc:
        return SolveReport(
            cycle=None, mean_weight=math.nan, imbalance_achieved=exc.imbalance,
            steps=exc.steps, passes=exc.passes,
            wall_ms=(time.perf_counter() - t0) * 1e3,
            dual_lower_bound=math.nan, eta=eta, delta=delta, d_tilde=d_tilde,
            status="cap_exceeded", memory_peak_entries=meter.peak)
    trees = sp_tree_pair(g, 0, meter)
    if cfg.memory_mode == "dense":
        bf = build_balanced_flow(pot, prob, meter=meter)
        imb = bf.imbalance
        log_sum_a = bf.log_sum_a
        qc = round_qcirc(g, bf.flow, cfg.eps, d_tilde, trees, meter=meter)
    else:
        ymax, _, s_kept, log_alpha, log_sum_a = balance_summary(pot.x, prob)
        imb = ostats["imbalance"]
        qc = round_qcirc_oracle(g, pot.x, eta, ymax, s_kept, log_alpha,
                                cfg.eps, d_tilde, trees, meter=meter)
    cyc = round_cycle(g, qc, meter=meter)
    return SolveReport(
        cycle=cyc, mean_weight=cyc.mean_weight, imbalance_achieved=float(imb),
        steps=ostats["steps"], passes=ostats["passes"],
        wall_ms=(time.perf_counter() - t0) * 1e3,
        dual_lower_bound=-log_sum_a / eta, eta=eta, delta=delta,
        d_tilde=d_tilde, status="ok", memory_peak_entries=meter.peak)


def solve_all_components(g: WeightedDigraph, cfg: BalSolverConfig,
                         solver=ammc_bal):
    """Solve each strongly connected component that carries an edge and
    return (best report or None, all per-component reports) with cycles
    lifted back to the input graph's vertex and edge ids. A DAG yields
    (None, [])."""
    best: SolveReport | None = None
    reports: list[SolveReport] = []
    for comp in scc_decompose(g):
        sub, vmap, edge_ids = induced_subgraph(g, comp)
        if sub.m == 0:
            continue
        rep = solver(sub, cfg)
        if rep.cycle is not None:
            lifted = Cycle.from_edges(g, [int(edge_ids[e]) for e in rep.cycle.edges])
            rep = replace(rep, cycle=lifted)
        reports.append(rep)
        if rep.cycle is not None and (best is None
                                      or rep.mean_weight < best.mean_weight):
            best = rep
    return best, reports


def sweep_eta(g: WeightedDigraph, etas, pass_budget: float, seeds,
              delta: float = 1e-5):
    """Fixed-budget accuracy sweep: balance with each eta for at most
    pass_budget passes, build P, and record its LP cost minus the exact
    optimum. Returns one dict per (eta, seed) with keys eta, seed, passes,
    wall_ms, and err (the suboptimality of <P, W>)."""
    mu, _ = karp_mmc(g)
    rows = []
    for eta in etas:
        prob = BalanceProblem(g, float(eta), delta)
        for seed in seeds:
            t0 = time.perf_counter()
            stats: dict = {}
            pot = random_osborne(prob, int(seed), max_passes=pass_budget,
                                 stats=stats)
            bf = build_balanced_flow(pot, prob)
            rows.append({"eta": float(eta), "seed": int(seed),
                         "passes": float(stats["passes"]),
                         "wall_ms": (time.perf_counter() - t0) * 1e3,
                         "err": lp_cost(g, bf.flow) - mu})
    return rows
