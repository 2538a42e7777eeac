"""Matrix balancing of the implicit entrywise exponential K = exp(-eta W).

K is never materialized: every kernel recomputes the log entry -eta * w[e]
from the weights, and all row/column sums are max-shifted log-sum-exps.
Random Osborne picks a uniformly random vertex per step and equalizes its
row and column sums; the full l1 imbalance is rechecked every n steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .flows import EdgeFlow
from .graph import NULL_METER, NotStronglyConnectedError, WeightedDigraph, adiam

#: drop-threshold constant shared with the rounding quantum (1/40 of
#: eps/(w_max m d) equals (2/5) delta / m under the solver's delta choice)
DROP_COEFF = 2.0 / 5.0


class OsborneCapExceeded(RuntimeError):
    """Balancing did not reach the target imbalance within the step cap."""

    def __init__(self, imbalance: float, steps: int, passes: float, x: np.ndarray):
        super().__init__(f"imbalance {imbalance:.3e} after {steps} Osborne steps")
        self.imbalance = imbalance
        self.steps = steps
        self.passes = passes
        self.x = x


@dataclass(frozen=True)
class BalanceProblem:
    """Balancing instance: graph, regularization eta, target imbalance delta.

    log_kappa_bound bounds the log ratio of extreme K entries by
    log m + 2 eta w_max (used by the conditioning check).
    """
    graph: WeightedDigraph
    eta: float
    delta: float

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")

    @property
    def log_k(self) -> np.ndarray:
        return -self.eta * self.graph.w

    @property
    def log_kappa_bound(self) -> float:
        g = self.graph
        return math.log(max(g.m, 1)) + 2.0 * self.eta * g.w_max


@dataclass(frozen=True)
class Potential:
    """Diagonal scaling exponents; the MMC dual potential is p = -x/eta."""
    x: np.ndarray


@dataclass(frozen=True)
class BalancedFlow:
    """P = A / sum(A) for A = diag(e^x) K diag(e^-x), built stably."""
    flow: EdgeFlow
    x: np.ndarray
    imbalance: float          # recomputed from the final P
    log_sum_a: float          # over all entries, before any dropping
    dropped: int              # entries zeroed by the stability threshold


def _imbalance_stats(x, g: WeightedDigraph, eta, logr, logc):
    return _kernels.imbalance_stats(x, g.out_ptr, g.out_eid, g.head,
                                    g.in_ptr, g.in_eid, g.tail, g.w, eta,
                                    logr, logc)


def _step_cap(m: int, n: int, delta: float) -> int:
    # 100 * m * d~^2 * (w_max/eps)^2 * log n with eps = 16 w_max d~ delta:
    # the d~ and w_max factors cancel, leaving the pure-delta form.
    return math.ceil(100.0 * m * math.log(max(n, 2)) / (256.0 * delta * delta))


def random_osborne(prob: BalanceProblem, rng_seed, max_passes: float | None = None,
                   meter=NULL_METER, stats: dict | None = None) -> Potential:
    """Run Random Osborne until A is delta-balanced in l1.

    Returns the potential x. With max_passes set, stops early once that many
    passes through the graph are spent (used by the eta-sweep experiment;
    the delta guarantee then no longer holds and stats notes it). Raises
    OsborneCapExceeded when the step cap is hit first.
    """
    g = prob.graph
    n, m = g.n, g.m
    x = meter.array(n, np.float64, fill=0.0)
    if prob.delta >= 2.0:
        # any scaling is 2-balanced; accept x = 0 without touching the graph
        if stats is not None:
            stats.update(steps=0, passes=0.0, imbalance=2.0, log_sum_a=np.nan,
                         budget_exhausted=False)
        return Potential(x)
    adiam(g, meter=meter)  # raises NotStronglyConnectedError when unbalanceable
    logr = meter.array(n, np.float64)
    logc = meter.array(n, np.float64)
    log_sum_k = float(_kernels.lse_neg_scaled(g.w, prob.eta))
    rng = np.random.default_rng(rng_seed)
    idx = meter.array(n, np.int64)
    cap = _step_cap(m, n, prob.delta)
    steps = 0
    passes = 0.0
    exhausted = False
    imb, log_sum_a = _imbalance_stats(x, g, prob.eta, logr, logc)
    while imb > prob.delta:
        if steps >= cap:
            raise OsborneCapExceeded(imb, steps, passes, x.copy())
        if max_passes is not None and passes >= max_passes:
            exhausted = True
            break
        meter.transient(n)
        idx[:] = rng.integers(0, n, size=n)
        p_inc, done, status = _kernels.osborne_batch(
            x, g.out_ptr, g.out_eid, g.head, g.in_ptr, g.in_eid, g.tail,
            g.w, prob.eta, idx, m)
        passes += float(p_inc)  # plain float under either kernel backend
        steps += int(done)
        if status != 0:
            raise NotStronglyConnectedError(
                "a vertex has entries in only one direction; K is not balanceable")
        imb, log_sum_a = _imbalance_stats(x, g, prob.eta, logr, logc)
    if not exhausted and log_sum_a > log_sum_k + 1e-9:
        raise AssertionError("sum(A) exceeded sum(K) after balancing")
    if stats is not None:
        stats.update(steps=steps, passes=passes, imbalance=float(imb),
                     log_sum_a=float(log_sum_a), budget_exhausted=exhausted)
    return Potential(x)


def osborne_step(x: Potential, i: int, prob: BalanceProblem) -> Potential:
    """One Osborne coordinate step at vertex i (value semantics)."""
    g = prob.graph
    if g.out_degree(i) == 0 or g.in_degree(i) == 0:
        raise ValueError(f"vertex {i} lacks an in- or out-edge; not balanceable")
    xv = x.x.copy()
    idx = np.array([i], dtype=np.int64)
    _, _, status = _kernels.osborne_batch(
        xv, g.out_ptr, g.out_eid, g.head, g.in_ptr, g.in_eid, g.tail,
        g.w, prob.eta, idx, g.m)
    if status != 0:
        raise ValueError(f"vertex {i} has entries in only one direction")
    return Potential(xv)


def balance_summary(x: np.ndarray, prob: BalanceProblem, no_drop: bool = False):
    """Scalar statistics of A without materializing P: returns
    (ymax, s_all, s_kept, log_alpha, log_sum_a). This is the O(n)-memory
    route; the dense build uses the same kernel with a fill pass."""
    g = prob.graph
    log_alpha = -np.inf if no_drop else math.log(DROP_COEFF * prob.delta / g.m)
    dummy = np.empty(1)
    ymax, s_all, s_kept = _kernels.balanced_flow_stats(
        x, g.tail, g.head, g.w, prob.eta, log_alpha, dummy, 0)
    ymax, s_all, s_kept = float(ymax), float(s_all), float(s_kept)
    return ymax, s_all, s_kept, log_alpha, ymax + math.log(s_all)


def build_balanced_flow(x: Potential, prob: BalanceProblem, no_drop: bool = False,
                        meter=NULL_METER) -> BalancedFlow:
    """Materialize P = A/sum(A) stably: shift exponents by their max, zero
    entries below the drop threshold alpha, normalize the rest.

    The threshold alpha = (2/5) delta / m equals the rounding quantum
    1/40 * eps/(w_max m d) under the solver's delta; no_drop disables it
    (needed when P's entropy must match the duality-gap identity exactly).
    """
    g = prob.graph
    log_alpha = -np.inf if no_drop else math.log(DROP_COEFF * prob.delta / g.m)
    p = meter.array(g.m, np.float64)
    ymax, s_all, s_kept = _kernels.balanced_flow_stats(
        x.x, g.tail, g.head, g.w, prob.eta, log_alpha, p, 1)
    flow = EdgeFlow(p)
    nf = (np.bincount(g.head, weights=p, minlength=g.n)
          - np.bincount(g.tail, weights=p, minlength=g.n))
    dropped = int(np.count_nonzero(p == 0.0)) if not no_drop else 0
    return BalancedFlow(flow=flow, x=x.x, imbalance=float(np.abs(nf).sum()),
                        log_sum_a=float(ymax + math.log(s_all)), dropped=dropped)
