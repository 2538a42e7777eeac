"""Rounding a near-circulation to a cycle.

round_circ pushes saturating flow along shortest-path-tree paths to kill the
netflow imbalance; round_qcirc first floors the flow to integer multiples of
a quantum alpha so the balancing and the final circulation are exact in
integer counts; round_cycle cancels cycles off the quantized circulation by
a cursor-based DFS until one with mean <= <W, F> appears.

The quantized stages carry all mass as int64 counts with one shared scale
gamma = 1/S, so conservation and gamma-quantization are identities, not
approximations. In the O(n)-memory mode the per-edge counts are recomputed
on demand from the balancing statistics, and the mass added by round_circ
lives in a per-vertex ledger keyed by tree edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .flows import Cycle, EdgeFlow, imbalance, netflow
from .graph import (NULL_METER, NoCycleError, SpTreePair, WeightedDigraph,
                    adiam, sp_tree_pair)

#: denominator constant in the quantum alpha = eps/(40 m d w_max)
QUANT_DENOM = 40.0

_DUMMY_F = np.empty(1, dtype=np.float64)
_DUMMY_I = np.empty(1, dtype=np.int64)


@dataclass
class FlowAdjustmentLedger:
    """Mass added by the balancing pushes, supported on the two tree edge
    sets: add_in[v] sits on edge (v, parent_in[v]), add_out[v] on edge
    (parent_out[v], v). Two length-n arrays realize the ordered map."""

    trees: SpTreePair
    add_in: np.ndarray
    add_out: np.ndarray

    def as_mapping(self) -> dict[int, float]:
        """Edge id -> added mass, ascending edge id (the map view)."""
        out: dict[int, float] = {}
        for v in range(self.add_in.shape[0]):
            if self.add_in[v] != 0:
                e = int(self.trees.edge_in[v])
                out[e] = out.get(e, 0) + self.add_in[v].item()
            if self.add_out[v] != 0:
                e = int(self.trees.edge_out[v])
                out[e] = out.get(e, 0) + self.add_out[v].item()
        return dict(sorted(out.items()))

    def support_size(self) -> int:
        return len(self.as_mapping())

    def dot(self, w: np.ndarray) -> float:
        """Sum of added mass times edge weight (same accumulation order in
        dense and oracle modes)."""
        acc = 0.0
        for v in range(self.add_in.shape[0]):
            if self.add_in[v] != 0:
                acc += self.add_in[v] * w[int(self.trees.edge_in[v])]
            if self.add_out[v] != 0:
                acc += self.add_out[v] * w[int(self.trees.edge_out[v])]
        return acc

    def scatter_into(self, vals: np.ndarray) -> None:
        for v in range(self.add_in.shape[0]):
            if self.add_in[v] != 0:
                vals[int(self.trees.edge_in[v])] += self.add_in[v]
            if self.add_out[v] != 0:
                vals[int(self.trees.edge_out[v])] += self.add_out[v]


@dataclass
class _OracleFlow:
    """Context to recompute quantized base counts on demand: the P entry is
    exp(shifted exponent)/s_kept when above the drop threshold, floored to a
    multiple of alpha with arithmetic identical to the dense route."""
    x: np.ndarray
    eta: float
    ymax: float
    s_kept: float
    log_alpha: float


@dataclass
class QuantizedCirculation:
    """Exact circulation as integer counts at scale gamma = 1/total.

    counts holds the floored base counts (before the ledger's additions);
    flow the materialized F. Both are None in the O(n)-memory mode, where
    `oracle` carries what is needed to recompute base counts per edge.
    """
    gamma: float
    alpha: float
    beta: float
    total: int
    base_total: int
    base_dot: float
    ledger: FlowAdjustmentLedger
    counts: np.ndarray | None = None
    flow: EdgeFlow | None = None
    oracle: _OracleFlow | None = None

    def full_counts(self) -> np.ndarray:
        if self.counts is None:
            raise ValueError("oracle-mode circulation does not hold dense counts")
        m = self.counts.copy()
        self.ledger.scatter_into(m)
        return m


def _push_to_balance(net, trees: SpTreePair, add_in, add_out, zero_tol):
    """Two-pointer saturating pushes: route the surplus at the lowest-index
    positive-netflow vertex to the lowest-index negative one along
    in-tree + out-tree paths. Mutates net/add_in/add_out; returns
    (total added mass, pushes). Works on float or integer arrays."""
    n = net.shape[0]
    root = trees.root
    i = 0
    j = 0
    added = net.dtype.type(0)
    pushes = 0
    while True:
        while i < n and net[i] <= zero_tol:
            i += 1
        while j < n and net[j] >= -zero_tol:
            j += 1
        if i >= n or j >= n:
            break
        d = net[i] if net[i] < -net[j] else -net[j]
        a = i
        while a != root:
            add_in[a] += d
            added += d
            a = int(trees.parent_in[a])
        b = j
        while b != root:
            add_out[b] += d
            added += d
            b = int(trees.parent_out[b])
        net[i] -= d
        net[j] += d
        pushes += 1
    return added, pushes


def round_circ(g: WeightedDigraph, p: EdgeFlow, trees: SpTreePair | None = None,
               return_ledger: bool = False, meter=NULL_METER):
    """Round p to a circulation F with ||F - p||_1 <= 2 d imb(p).

    Float mode: mass is pushed along tree paths, then everything is divided
    by the total. An already-balanced p is returned unchanged.
    """
    if p.m != g.m:
        raise ValueError("flow not aligned with graph edges")
    net = netflow(g, p).values
    if np.abs(net).max(initial=0.0) <= 1e-15:
        if return_ledger:
            z = np.zeros(g.n)
            t = trees if trees is not None else sp_tree_pair(g, 0, meter)
            return p, FlowAdjustmentLedger(t, z, z.copy())
        return p
    if trees is None:
        trees = sp_tree_pair(g, 0, meter)
    add_in = meter.array(g.n, np.float64, fill=0.0)
    add_out = meter.array(g.n, np.float64, fill=0.0)
    _push_to_balance(net, trees, add_in, add_out, 1e-16)
    vals = p.values.copy()
    ledger = FlowAdjustmentLedger(trees, add_in, add_out)
    ledger.scatter_into(vals)
    vals /= vals.sum()
    f = EdgeFlow(vals)
    return (f, ledger) if return_ledger else f


def quantum(g: WeightedDigraph, eps: float, d_tilde: int) -> float:
    """The rounding quantum alpha = eps / (40 m d w_max)."""
    return eps / (QUANT_DENOM * g.m * max(d_tilde, 1) * g.w_max)


def round_qcirc(g: WeightedDigraph, p: EdgeFlow, eps: float,
                d_tilde: int | None = None, trees: SpTreePair | None = None,
                meter=NULL_METER, stats: dict | None = None,
                direct_pairs: bool = False) -> QuantizedCirculation:
    """Quantize p down to multiples of alpha, rebalance exactly in counts.

    Guarantee (for imb(p) <= 1/d): ||F - p||_1 <= 4 d imb(p) + eps/(4 w_max)
    and F is gamma-quantized with gamma = beta/sum(Q) >= alpha/2.

    With direct_pairs, a push between vertices joined by an edge lands on
    that edge instead of the tree path (a complete-graph shortcut, off by
    default); counts are then fully materialized and the ledger is empty.
    """
    if g.w_max <= 0.0:
        raise ValueError("quantization needs w_max > 0")
    if not 0.0 < eps <= 2.0 * g.w_max:
        raise ValueError("need 0 < eps <= 2 w_max")
    if d_tilde is None:
        d_tilde = adiam(g, meter=meter).d_tilde
    d_eff = max(d_tilde, 1)
    imb_p = imbalance(netflow(g, p))
    if imb_p > 2.0 / d_eff + 1e-12:
        raise ValueError(f"imb(p) = {imb_p:.3g} violates the <= 1/d hypothesis")
    alpha = quantum(g, eps, d_tilde)
    if trees is None:
        trees = sp_tree_pair(g, 0, meter)
    net = meter.array(g.n, np.int64, fill=0)
    counts = meter.array(g.m, np.int64)
    base_total, base_dot = _kernels.quantize_counts(
        g.tail, g.head, g.w, p.values, 1, _DUMMY_F, 0.0, 0.0, 1.0, 0.0,
        alpha, net, counts, 1)
    add_in = meter.array(g.n, np.int64, fill=0)
    add_out = meter.array(g.n, np.int64, fill=0)
    if direct_pairs:
        added, pushes = _push_direct(g, net, counts, trees, add_in, add_out)
    else:
        added, pushes = _push_to_balance(net, trees, add_in, add_out, 0)
    total = int(base_total + added)
    ledger = FlowAdjustmentLedger(trees, add_in, add_out)
    full = counts.copy()
    ledger.scatter_into(full)
    gamma = 1.0 / total
    qc = QuantizedCirculation(
        gamma=gamma, alpha=alpha, beta=1.0 / base_total, total=total,
        base_total=int(base_total), base_dot=float(base_dot), ledger=ledger,
        counts=counts, flow=EdgeFlow(full * gamma))
    if stats is not None:
        stats.update(imb_p=imb_p, pushes=pushes, added_counts=int(added),
                     alpha=alpha, gamma=gamma)
    return qc


def _push_direct(g: WeightedDigraph, net, counts, trees, add_in, add_out):
    """Push variant that uses the edge (i, j) when it exists (a
    complete-graph shortcut), falling back to tree paths otherwise. Adds
    land directly in counts, so the ledger stays empty on direct hits."""
    pair = {(int(t), int(h)): e for e, (t, h) in enumerate(zip(g.tail, g.head))}
    n = net.shape[0]
    root = trees.root
    i = j = 0
    added = 0
    pushes = 0
    while True:
        while i < n and net[i] <= 0:
            i += 1
        while j < n and net[j] >= 0:
            j += 1
        if i >= n or j >= n:
            break
        d = int(min(net[i], -net[j]))
        e = pair.get((i, j))
        if e is not None:
            counts[e] += d
            added += d
        else:
            a = i
            while a != root:
                add_in[a] += d
                added += d
                a = int(trees.parent_in[a])
            b = j
            while b != root:
                add_out[b] += d
                added += d
                b = int(trees.parent_out[b])
        net[i] -= d
        net[j] += d
        pushes += 1
    return added, pushes


def round_qcirc_oracle(g: WeightedDigraph, x: np.ndarray, eta: float,
                       ymax: float, s_kept: float, log_alpha: float,
                       eps: float, d_tilde: int, trees: SpTreePair,
                       meter=NULL_METER,
                       stats: dict | None = None) -> QuantizedCirculation:
    """O(n)-memory round_qcirc over the implicit balanced flow.

    Base counts are never materialized: quantize_counts streams the edges
    recomputing each P entry from (x, eta, ymax, s_kept), bit-identical to
    the dense route. The caller guarantees the imbalance hypothesis (it
    holds by the balancing target delta)."""
    alpha = quantum(g, eps, d_tilde)
    net = meter.array(g.n, np.int64, fill=0)
    base_total, base_dot = _kernels.quantize_counts(
        g.tail, g.head, g.w, _DUMMY_F, 0, x, eta, ymax,
        s_kept, log_alpha, alpha, net, _DUMMY_I, 0)
    add_in = meter.array(g.n, np.int64, fill=0)
    add_out = meter.array(g.n, np.int64, fill=0)
    added, pushes = _push_to_balance(net, trees, add_in, add_out, 0)
    total = int(base_total + added)
    qc = QuantizedCirculation(
        gamma=1.0 / total, alpha=alpha, beta=1.0 / base_total, total=total,
        base_total=int(base_total), base_dot=float(base_dot),
        ledger=FlowAdjustmentLedger(trees, add_in, add_out),
        oracle=_OracleFlow(x, eta, ymax, s_kept, log_alpha))
    if stats is not None:
        stats.update(pushes=pushes, added_counts=int(added), alpha=alpha,
                     gamma=qc.gamma)
    return qc


def round_cycle(g: WeightedDigraph, qc: QuantizedCirculation,
                stats: dict | None = None, meter=NULL_METER) -> Cycle:
    """Cancel cycles off the quantized circulation until one with mean at
    most <W, F> appears (it must: the minimum cycle mean in any circulation's
    decomposition is at most the weighted average)."""
    n = g.n
    cursor = meter.array(n, np.int64, fill=0)
    remain = meter.array(n, np.int64, fill=-1)
    pos = meter.array(n, np.int64, fill=-1)
    stack_v = meter.array(n + 1, np.int64)
    stack_e = meter.array(n + 1, np.int64)
    cyc_buf = meter.array(n + 1, np.int64)
    best_buf = meter.array(n + 1, np.int64)
    target = qc.gamma * (qc.base_dot + qc.ledger.dot(g.w))
    tol = 1e-12 * max(1.0, abs(target))
    tr = qc.ledger.trees
    if qc.counts is not None:
        args = (qc.counts, 1, _DUMMY_F, 0.0, 0.0, 1.0, 0.0, qc.alpha)
    else:
        o = qc.oracle
        args = (_DUMMY_I, 0, o.x, o.eta, o.ymax, o.s_kept,
                o.log_alpha, qc.alpha)
    best_len, best_mean, cancelled, status = _kernels.round_cycle_scan(
        n, g.out_ptr, g.out_eid, g.head, g.tail, g.w,
        *args,
        qc.ledger.add_in, tr.edge_in, qc.ledger.add_out, tr.edge_out,
        target, tol,
        cursor, remain, pos, stack_v, stack_e, cyc_buf, best_buf)
    if status == 2:
        raise RuntimeError("counts do not form a circulation (internal error)")
    if best_len == 0:
        raise NoCycleError("quantized flow carries no cycle")
    cyc = Cycle.from_edges(g, [int(e) for e in best_buf[:best_len]])
    if stats is not None:
        stats.update(cancelled_visits=int(cancelled), early_exit=(status == 1),
                     target_cost=target)
    return cyc


def round_pipeline(g: WeightedDigraph, p: EdgeFlow, eps: float,
                   d_tilde: int | None = None, trees: SpTreePair | None = None,
                   stats: dict | None = None, meter=NULL_METER) -> Cycle:
    """round_qcirc then round_cycle: cycle with mean <= <P, W> + eps/4
    + 4 w_max d imb(p)."""
    qc = round_qcirc(g, p, eps, d_tilde, trees, meter, stats)
    return round_cycle(g, qc, stats, meter)
