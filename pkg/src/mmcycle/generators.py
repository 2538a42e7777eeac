"""Random instance and flow generators for benchmarks and tests.

All weights from gen_arbitrage_like are snapped to the 2^-20 dyadic grid so
that potential-disguise telescoping cancels exactly in float arithmetic.
"""

from __future__ import annotations

import numpy as np

from .flows import EdgeFlow
from .graph import WeightedDigraph

_GRID = 2.0 ** 20


def _snap(a):
    return np.round(np.asarray(a, dtype=np.float64) * _GRID) / _GRID


def ring(n: int, w=None) -> WeightedDigraph:
    """Directed n-cycle 0 -> 1 -> ... -> n-1 -> 0."""
    tail = np.arange(n, dtype=np.int64)
    head = (tail + 1) % n
    if w is None:
        w = np.zeros(n)
    return WeightedDigraph(n, tail, head, w)


def gen_random_sc(n: int, extra: int, seed, w_lo: float = -1.0,
                  w_hi: float = 1.0) -> WeightedDigraph:
    """Strongly connected random graph: a planted permutation cycle through
    all n vertices plus `extra` distinct random non-loop edges, weights
    uniform in [w_lo, w_hi]."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pairs = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    if n == 1:
        pairs = {(0, 0)}  # the permutation "cycle" is a self-loop
    pool = [(u, v) for u in range(n) for v in range(n)
            if u != v and (u, v) not in pairs]
    extra = min(extra, len(pool))
    if extra:
        for k in rng.choice(len(pool), size=extra, replace=False):
            pairs.add(pool[int(k)])
    edges = sorted(pairs)
    w = rng.uniform(w_lo, w_hi, size=len(edges))
    return WeightedDigraph(n, [e[0] for e in edges], [e[1] for e in edges], w)


def gen_arbitrage_like(n: int, seed, delete_frac: float = 0.01,
                       disguise: bool = True):
    """Near-complete instance in the style of currency-exchange graphs.

    Base weights log v_i - log v_j + fee are min-max normalized to [0, 1],
    then a random Hamiltonian cycle is planted (one edge 0.1, the rest 0.5)
    and a random potential p in [0, 0.1]^n is telescoped onto all edges,
    which leaves every cycle mean unchanged. Returns (graph, planted_mean).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    logv = rng.uniform(0.0, 1.0, size=n)
    perm = rng.permutation(n)
    planted = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    deletable = [k for k, uv in enumerate(pairs) if uv not in planted]
    n_del = int(round(delete_frac * len(pairs)))
    n_del = min(n_del, len(deletable))
    drop = set()
    if n_del:
        drop = {deletable[int(k)]
                for k in rng.choice(len(deletable), size=n_del, replace=False)}
    kept = [uv for k, uv in enumerate(pairs) if k not in drop]
    tail = np.array([u for u, _ in kept], dtype=np.int64)
    head = np.array([v for _, v in kept], dtype=np.int64)
    fee = rng.uniform(0.0, 0.05, size=len(kept))
    w = logv[tail] - logv[head] + fee
    w = (w - w.min()) / max(w.max() - w.min(), 1e-30)
    w = _snap(w)
    # plant after normalizing: one light edge, the rest mid-weight
    light = int(rng.integers(n))
    planted_list = [(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)]
    eidx = {uv: k for k, uv in enumerate(kept)}
    for i, uv in enumerate(planted_list):
        w[eidx[uv]] = _snap(0.1 if i == light else 0.5)
    planted_mean = float(sum(w[eidx[uv]] for uv in planted_list) / n)
    if disguise:
        p = _snap(rng.uniform(0.0, 0.1, size=n))
        w = (w + p[tail]) - p[head]
    return WeightedDigraph(n, tail, head, w), planted_mean


def gen_circulation_counts(g: WeightedDigraph, seed, k_cycles: int = 4):
    """Integer edge counts forming a circulation: k random-walk cycles with
    random multiplicities. Returns an int64 array (may be all zero only if
    the walk logic fails, which it cannot on a strongly connected graph)."""
    rng = np.random.default_rng(seed)
    counts = np.zeros(g.m, dtype=np.int64)
    for _ in range(k_cycles):
        start = int(rng.integers(g.n))
        pos = {start: 0}
        path_v = [start]
        path_e = []
        v = start
        while True:
            deg = g.out_degree(v)
            e = int(g.out_eid[g.out_ptr[v] + int(rng.integers(deg))])
            u = int(g.head[e])
            path_e.append(e)
            if u in pos:
                mult = int(rng.integers(1, 8))
                for ce in path_e[pos[u]:]:
                    counts[ce] += mult
                break
            pos[u] = len(path_v)
            path_v.append(u)
            v = u
    return counts


def gen_circulation(g: WeightedDigraph, seed, k_cycles: int = 4) -> EdgeFlow:
    """Unit-mass circulation built from integer cycle counts."""
    counts = gen_circulation_counts(g, seed, k_cycles)
    return EdgeFlow(counts / counts.sum())


def gen_near_circulation(g: WeightedDigraph, seed, theta: float) -> EdgeFlow:
    """(1 - theta) * circulation + theta * point mass on a random edge;
    imbalance is at most 2 * theta."""
    rng = np.random.default_rng(seed)
    circ = gen_circulation(g, int(rng.integers(2 ** 62)), k_cycles=4)
    vals = (1.0 - theta) * circ.values
    vals[int(rng.integers(g.m))] += theta
    return EdgeFlow(vals)


def gen_int_no_neg_cycle(n: int, extra: int, seed, b_max: int = 3,
                         phi_max: int = 4) -> WeightedDigraph:
    """Integer weights with no negative cycle: w = b + phi_i - phi_j with
    b >= 0, so every cycle weight telescopes to sum(b) >= 0."""
    rng = np.random.default_rng(seed)
    g0 = gen_random_sc(n, extra, int(rng.integers(2 ** 62)))
    phi = rng.integers(0, phi_max + 1, size=n)
    b = rng.integers(0, b_max + 1, size=g0.m)
    w = b + phi[g0.tail] - phi[g0.head]
    return WeightedDigraph(n, g0.tail, g0.head, w.astype(np.float64))


def gen_pm1_complete(n: int, seed) -> WeightedDigraph:
    """Complete digraph with weights in {-1, 0, 1} and no negative cycle:
    w = b + phi_i - phi_j with b, phi in {0, 1}; the lone w = 2 case
    (b = 1, phi_i = 1, phi_j = 0) is forced down to b = 0."""
    rng = np.random.default_rng(seed)
    phi = rng.integers(0, 2, size=n)
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    tail = np.array([u for u, _ in pairs], dtype=np.int64)
    head = np.array([v for _, v in pairs], dtype=np.int64)
    b = rng.integers(0, 2, size=len(pairs))
    w = b + phi[tail] - phi[head]
    w[w == 2] = 1  # equivalent to flipping that edge's b to 0
    return WeightedDigraph(n, tail, head, w.astype(np.float64))
