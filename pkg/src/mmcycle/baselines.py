"""Exact and reference algorithms: Karp's min-mean-cycle DP, brute-force
cycle enumeration, Bellman-Ford, Dijkstra, and correction of an approximate
shortest-path tree to an exact one."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .flows import Cycle
from .graph import NoCycleError, WeightedDigraph

_ENUM_LIMIT = 12


class NegativeCycleError(ValueError):
    """A negative-weight cycle was detected."""


class PotentialQualityError(RuntimeError):
    """The balancing potential failed to make reduced weights >= -eps."""


def karp_mmc(g: WeightedDigraph):
    """Exact minimum mean cycle via Karp's DP from source 0.

    mu = min_v max_k (D_n(v) - D_k(v)) / (n - k) over vertices with a
    length-n walk; the cycle is read off the predecessor table (every cycle
    on the critical walk is min-mean). Requires strong connectivity.
    Returns (mu, Cycle).
    """
    n, m = g.n, g.m
    if m == 0:
        raise NoCycleError("graph has no edges")
    dist = np.full((n + 1, n), np.inf)
    pred = np.full((n + 1, n), -1, dtype=np.int64)
    dist[0, 0] = 0.0
    _kernels.karp_table(g.tail, g.head, g.w, n, dist, pred)
    best_v = -1
    best_val = np.inf
    for v in range(n):
        if not np.isfinite(dist[n, v]):
            continue
        worst = -np.inf
        for k in range(n):
            if np.isfinite(dist[k, v]):
                val = (dist[n, v] - dist[k, v]) / (n - k)
                if val > worst:
                    worst = val
        if worst < best_val:
            best_val = worst
            best_v = v
    if best_v < 0:
        raise NoCycleError("no length-n walk exists; graph has no cycle "
                           "reachable this way (is it strongly connected?)")
    # walk the predecessor table back from (n, best_v); first repeated
    # vertex closes a min-mean cycle
    seen = {best_v: n}
    lvl = n
    v = best_v
    path_edges: list[int] = []
    while lvl > 0:
        e = int(pred[lvl, v])
        path_edges.append(e)
        u = int(g.tail[e])
        lvl -= 1
        if u in seen:
            cyc_edges = list(reversed(path_edges[-(seen[u] - lvl):]))
            return float(best_val), Cycle.from_edges(g, cyc_edges)
        seen[u] = lvl
        v = u
    raise AssertionError("predecessor walk of length n had no repeat")


def list_simple_cycles(g: WeightedDigraph) -> list[tuple[int, ...]]:
    """All simple cycles as edge-id tuples, each counted once (smallest
    vertex first). Guarded to n <= 12: this is a test oracle."""
    if g.n > _ENUM_LIMIT:
        raise ValueError(f"cycle enumeration is limited to n <= {_ENUM_LIMIT}")
    out: list[tuple[int, ...]] = []
    onpath = [False] * g.n

    def walk(s: int, v: int, path: list[int]) -> None:
        for e in g.out_edges(v):
            e = int(e)
            u = int(g.head[e])
            if u == s:
                out.append(tuple(path + [e]))
            elif u > s and not onpath[u]:
                onpath[u] = True
                walk(s, u, path + [e])
                onpath[u] = False

    for s in range(g.n):
        walk(s, s, [])
    return out


def enumerate_cycles_mmc(g: WeightedDigraph):
    """Exact MMC by exhaustive simple-cycle enumeration (n <= 12 oracle)."""
    best_mean = np.inf
    best: tuple[int, ...] | None = None
    for edges in list_simple_cycles(g):
        mean = float(sum(g.w[e] for e in edges) / len(edges))
        if mean < best_mean:
            best_mean = mean
            best = edges
    if best is None:
        raise NoCycleError("graph has no cycle")
    return best_mean, Cycle.from_edges(g, best)


def bellman_ford(g: WeightedDigraph, s: int):
    """Classic relaxation; returns (dist, parent_edge, has_negative_cycle).
    Unreachable vertices keep dist = +inf. The negative-cycle flag covers
    cycles reachable from s."""
    dist = np.full(g.n, np.inf)
    par_e = np.full(g.n, -1, dtype=np.int64)
    dist[s] = 0.0
    for _ in range(g.n - 1):
        changed = False
        for e in range(g.m):
            t = int(g.tail[e])
            if np.isfinite(dist[t]) and dist[t] + g.w[e] < dist[int(g.head[e])]:
                dist[int(g.head[e])] = dist[t] + g.w[e]
                par_e[int(g.head[e])] = e
                changed = True
        if not changed:
            break
    neg = False
    for e in range(g.m):
        t = int(g.tail[e])
        if np.isfinite(dist[t]) and dist[t] + g.w[e] < dist[int(g.head[e])] - 1e-12:
            neg = True
            break
    return dist, par_e, neg


def dijkstra(g: WeightedDigraph, s: int, w=None):
    """Nonnegative-weight shortest paths; returns (dist, parent vertex,
    parent edge). w overrides the graph's weights."""
    wv = g.w if w is None else np.asarray(w, dtype=np.float64)
    if wv.size and wv.min() < 0.0:
        raise ValueError("dijkstra needs nonnegative weights")
    dist = np.full(g.n, np.inf)
    par_v = np.full(g.n, -1, dtype=np.int64)
    par_e = np.full(g.n, -1, dtype=np.int64)
    dist[s] = 0.0
    heap = [(0.0, s)]
    done = np.zeros(g.n, dtype=bool)
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for e in g.out_edges(v):
            e = int(e)
            u = int(g.head[e])
            cand = dv + wv[e]
            if cand < dist[u]:
                dist[u] = cand
                par_v[u] = v
                par_e[u] = e
                heapq.heappush(heap, (cand, u))
    return dist, par_v, par_e


@dataclass
class SsspTree:
    """Spanning shortest-path-candidate tree: parent pointers from source s
    and the tree-path distance estimate d_hat for every vertex."""
    source: int
    parent_v: np.ndarray
    parent_e: np.ndarray
    dist: np.ndarray

    @classmethod
    def from_parents(cls, g: WeightedDigraph, s: int, parent_v, parent_e) -> "SsspTree":
        """Build with d_hat = tree-path weight under g.w (memoized walks)."""
        parent_v = np.asarray(parent_v, dtype=np.int64).copy()
        parent_e = np.asarray(parent_e, dtype=np.int64).copy()
        dist = np.full(g.n, np.nan)
        dist[s] = 0.0
        for v0 in range(g.n):
            chain = []
            v = v0
            while np.isnan(dist[v]):
                chain.append(v)
                v = int(parent_v[v])
                if v < 0:
                    raise ValueError("parent pointers do not form a tree rooted at s")
            for u in reversed(chain):
                dist[u] = dist[int(parent_v[u])] + g.w[int(parent_e[u])]
        return cls(s, parent_v, parent_e, dist)


class RelaxQueue:
    """Relaxable edges ordered by (tail, head); realized as a lazy min-heap
    whose pops are revalidated against the current distance estimates."""

    def __init__(self):
        self._heap: list[tuple[int, int, int]] = []

    def push(self, i: int, j: int, eid: int) -> None:
        heapq.heappush(self._heap, (i, j, eid))

    def pop_valid(self, g: WeightedDigraph, dist) -> tuple[int, int, int] | None:
        """Pop the smallest-key edge that is still relaxable, or None."""
        while self._heap:
            i, j, eid = heapq.heappop(self._heap)
            if dist[i] + g.w[eid] < dist[j]:
                return i, j, eid
        return None

    def __len__(self) -> int:
        return len(self._heap)


def sssp_correct(g: WeightedDigraph, s: int, t0: SsspTree, stats: dict | None = None) -> SsspTree:
    """Correct an approximate shortest-path tree to the exact one.

    Integer weights required. Pops relaxable edges (i, j); each valid pop
    re-parents j under i and adds the (negative, integer) slack to j's whole
    subtree, then re-examines the subtree's out-edges. The total number of
    vertex touches is at most sum_v (d_hat_v - d_v). A relaxation whose head
    is an ancestor of its tail closes a negative cycle.
    """
    if not np.all(g.w == np.round(g.w)):
        raise ValueError("sssp_correct requires integer weights")
    d = t0.dist.astype(np.float64).copy()
    par_v = t0.parent_v.copy()
    par_e = t0.parent_e.copy()
    children: list[list[int]] = [[] for _ in range(g.n)]
    for v in range(g.n):
        if v != s and par_v[v] >= 0:
            children[int(par_v[v])].append(v)
    q = RelaxQueue()
    for e in range(g.m):
        i, j = int(g.tail[e]), int(g.head[e])
        if d[i] + g.w[e] < d[j]:
            q.push(i, j, e)
    processed = 0
    relaxations = 0
    cap = 8 * g.n ** 3 * (int(g.w_max) + 2) + 64
    while True:
        item = q.pop_valid(g, d)
        if item is None:
            break
        i, j, e = item
        relaxations += 1
        if relaxations > cap:
            raise NegativeCycleError("relaxation cap exceeded; negative cycle suspected")
        # ancestor check: if j is on i's root path, (i, j) closes a negative cycle
        a = i
        while a >= 0:
            if a == j:
                raise NegativeCycleError(f"negative cycle closed by edge ({i}, {j})")
            a = int(par_v[a])
        delta = d[i] + g.w[e] - d[j]
        if j != s and par_v[j] >= 0:
            children[int(par_v[j])].remove(j)
        par_v[j] = i
        par_e[j] = e
        children[i].append(j)
        stack = [j]
        subtree = []
        while stack:
            v = stack.pop()
            subtree.append(v)
            d[v] += delta
            processed += 1
            stack.extend(children[v])
        for v in subtree:
            for e2 in g.out_edges(v):
                e2 = int(e2)
                u = int(g.head[e2])
                if d[v] + g.w[e2] < d[u]:
                    q.push(v, u, e2)
    if stats is not None:
        stats["processed"] = processed
        stats["relaxations"] = relaxations
    return SsspTree(s, par_v, par_e, d)


def reduction_demo(g: WeightedDigraph, eps: float, seed=0, stats: dict | None = None) -> np.ndarray:
    """Single-source shortest paths on an integer-weighted graph with no
    negative cycle, via approximate MMC machinery.

    Balance at accuracy eps to get a potential p with reduced weights
    w + p_i - p_j >= -eps (up to tolerance), shift into nonnegative range,
    run Dijkstra, re-weight the Dijkstra tree under the original integers,
    and hand it to sssp_correct. Returns exact distances from vertex 0.
    """
    from .balancing import BalanceProblem, random_osborne
    from .graph import adiam

    if not np.all(g.w == np.round(g.w)):
        raise ValueError("reduction_demo requires integer weights")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    w_max = g.w_max
    if w_max == 0.0 or eps > 2.0 * w_max:
        p = np.zeros(g.n)
        eta = None
    else:
        d_eff = max(adiam(g).d_tilde, 1)
        eta = 2.5 * np.log(max(g.m, 2)) / eps
        delta = eps / (16.0 * w_max * d_eff)
        pot = random_osborne(BalanceProblem(g, eta, delta), seed)
        p = -pot.x / eta
    w_red = (g.w + p[g.tail]) - p[g.head]
    lo = float(w_red.min())
    if lo < -eps - 1e-6:
        raise PotentialQualityError(f"reduced weight {lo} below -eps tolerance")
    w_shift = np.maximum(w_red + eps, 0.0)
    _, par_v, par_e = dijkstra(g, 0, w_shift)
    if np.any((par_v < 0) & (np.arange(g.n) != 0)):
        raise ValueError("graph must be strongly connected for the demo")
    t0 = SsspTree.from_parents(g, 0, par_v, par_e)
    tree = sssp_correct(g, 0, t0, stats)
    if stats is not None:
        stats["eta"] = eta
        stats["min_reduced"] = lo
    return tree.dist
