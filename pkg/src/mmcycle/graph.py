"""Sparse weighted digraphs: CSR storage, connectivity, BFS trees, diameter.

The edge id order is the input order; per-vertex adjacency (the "edge oracle"
order) lists edge ids grouped by tail (out) and by head (in), stable within a
vertex. All solver stages address edges by these ids.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


class NotStronglyConnectedError(ValueError):
    """Raised when an operation requires strong connectivity and the graph
    (or the BFS it ran) shows a vertex is unreachable."""


class NoCycleError(ValueError):
    """The graph (or flow support) has no directed cycle."""


class _NullMeter:
    """Default allocation meter: counts nothing."""

    def array(self, size, dtype=np.float64, fill=None):
        if fill is None:
            return np.empty(int(size), dtype=dtype)
        return np.full(int(size), fill, dtype=dtype)

    def transient(self, size):
        pass


NULL_METER = _NullMeter()


class WeightedDigraph:
    """Immutable digraph with per-edge float weights.

    Self-loops are permitted; parallel (u, v) duplicates are rejected
    because collapsing them silently changes cycle means.
    """

    __slots__ = ("n", "m", "tail", "head", "w", "w_max",
                 "out_ptr", "out_eid", "in_ptr", "in_eid")

    def __init__(self, n: int, tail, head, w):
        n = int(n)
        if n < 1:
            raise ValueError("need at least one vertex")
        tail = np.ascontiguousarray(tail, dtype=np.int64)
        head = np.ascontiguousarray(head, dtype=np.int64)
        w = np.ascontiguousarray(w, dtype=np.float64)
        m = tail.shape[0]
        if head.shape[0] != m or w.shape[0] != m:
            raise ValueError("tail/head/w length mismatch")
        if m:
            if tail.min() < 0 or tail.max() >= n or head.min() < 0 or head.max() >= n:
                raise ValueError("edge endpoint out of range")
            if not np.all(np.isfinite(w)):
                raise ValueError("edge weights must be finite")
            keys = tail * n + head
            if np.unique(keys).shape[0] != m:
                raise ValueError("parallel duplicate edges are not allowed")
        self.n = n
        self.m = m
        self.tail = tail
        self.head = head
        self.w = w
        self.w_max = float(np.max(np.abs(w))) if m else 0.0
        self.out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(tail, minlength=n), out=self.out_ptr[1:])
        self.out_eid = np.argsort(tail, kind="stable").astype(np.int64)
        self.in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(head, minlength=n), out=self.in_ptr[1:])
        self.in_eid = np.argsort(head, kind="stable").astype(np.int64)
        # transpose recount: both adjacencies must index every edge once
        assert self.out_ptr[-1] == m and self.in_ptr[-1] == m

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedDigraph":
        """Build from an iterable of (u, v, w) triples."""
        es = list(edges)
        if es:
            t, h, w = zip(*es)
        else:
            t, h, w = (), (), ()
        return cls(n, np.array(t, dtype=np.int64), np.array(h, dtype=np.int64),
                   np.array(w, dtype=np.float64))

    def out_degree(self, v: int) -> int:
        return int(self.out_ptr[v + 1] - self.out_ptr[v])

    def in_degree(self, v: int) -> int:
        return int(self.in_ptr[v + 1] - self.in_ptr[v])

    def out_edges(self, v: int) -> np.ndarray:
        return self.out_eid[self.out_ptr[v]:self.out_ptr[v + 1]]

    def in_edges(self, v: int) -> np.ndarray:
        return self.in_eid[self.in_ptr[v]:self.in_ptr[v + 1]]

    def oracles(self) -> "GraphOracles":
        return GraphOracles(self)

    def __repr__(self) -> str:
        return f"WeightedDigraph(n={self.n}, m={self.m}, w_max={self.w_max:g})"


class GraphOracles:
    """Constant-time edge and weight oracles over a WeightedDigraph.

    Queries are pure; indices beyond the degree return None, and the weight
    oracle returns None for absent pairs (never a float sentinel).
    """

    __slots__ = ("g", "_pair")

    def __init__(self, g: WeightedDigraph):
        self.g = g
        self._pair = {(int(t), int(h)): int(e)
                      for e, (t, h) in enumerate(zip(g.tail, g.head))}

    def out_edge(self, v: int, k: int):
        if k < 0 or k >= self.g.out_degree(v):
            return None
        return int(self.g.out_eid[self.g.out_ptr[v] + k])

    def in_edge(self, v: int, k: int):
        if k < 0 or k >= self.g.in_degree(v):
            return None
        return int(self.g.in_eid[self.g.in_ptr[v] + k])

    def weight(self, u: int, v: int):
        e = self._pair.get((u, v))
        return None if e is None else float(self.g.w[e])


@dataclass(frozen=True)
class DiameterEstimate:
    """BFS-based diameter estimate: d <= d_tilde <= 2d."""
    d_tilde: int


@dataclass(frozen=True)
class SpTreePair:
    """Unweighted shortest-path trees into and out of a root vertex.

    parent_in[u] is the next hop on a shortest path u -> root (edge_in[u] the
    edge id u -> parent_in[u]); parent_out[u] is the predecessor on a
    shortest path root -> u (edge_out[u] the edge id parent_out[u] -> u).
    Roots carry parent -1 / edge -1.
    """
    root: int
    parent_in: np.ndarray
    edge_in: np.ndarray
    dist_to: np.ndarray
    parent_out: np.ndarray
    edge_out: np.ndarray
    dist_from: np.ndarray


def bfs(g: WeightedDigraph, src: int, direction: str = "out", meter=NULL_METER):
    """Unweighted BFS; returns (dist, parent vertex, parent edge id), with
    -1 parents and dist -1 for unreachable vertices. direction "in" walks
    reversed edges (distances TO src)."""
    n = g.n
    dist = meter.array(n, np.int64, fill=-1)
    par_v = meter.array(n, np.int64, fill=-1)
    par_e = meter.array(n, np.int64, fill=-1)
    dist[src] = 0
    meter.transient(n)  # queue high-water
    dq = deque([src])
    if direction == "out":
        ptr, eid, other = g.out_ptr, g.out_eid, g.head
    elif direction == "in":
        ptr, eid, other = g.in_ptr, g.in_eid, g.tail
    else:
        raise ValueError("direction must be 'out' or 'in'")
    while dq:
        a = dq.popleft()
        for t in range(ptr[a], ptr[a + 1]):
            e = eid[t]
            b = other[e]
            if dist[b] < 0:
                dist[b] = dist[a] + 1
                par_v[b] = a
                par_e[b] = e
                dq.append(b)
    return dist, par_v, par_e


def adiam(g: WeightedDigraph, v: int = 0, meter=NULL_METER) -> DiameterEstimate:
    """Estimate the unweighted diameter by BFS to and from one vertex."""
    dist_from, _, _ = bfs(g, v, "out", meter)
    dist_to, _, _ = bfs(g, v, "in", meter)
    if dist_from.min() < 0 or dist_to.min() < 0:
        raise NotStronglyConnectedError(
            f"vertex unreachable in BFS from/to {v}; graph is not strongly connected")
    return DiameterEstimate(int(dist_from.max() + dist_to.max()))


def sp_tree_pair(g: WeightedDigraph, v: int = 0, meter=NULL_METER) -> SpTreePair:
    """Shortest unweighted path trees into and out of v (BFS both ways)."""
    dist_from, par_out, edge_out = bfs(g, v, "out", meter)
    dist_to, par_in, edge_in = bfs(g, v, "in", meter)
    if dist_from.min() < 0 or dist_to.min() < 0:
        raise NotStronglyConnectedError(
            f"vertex unreachable in BFS from/to {v}; graph is not strongly connected")
    return SpTreePair(v, par_in, edge_in, dist_to, par_out, edge_out, dist_from)


def scc_decompose(g: WeightedDigraph) -> list[list[int]]:
    """Strongly connected components, topologically sorted (iterative Tarjan;
    completion order is reverse-topological, so the result is reversed)."""
    n = g.n
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    onstack = np.zeros(n, dtype=bool)
    sstack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                sstack.append(v)
                onstack[v] = True
            recurse = False
            deg = g.out_degree(v)
            for k in range(pi, deg):
                e = g.out_eid[g.out_ptr[v] + k]
                u = int(g.head[e])
                if index[u] == -1:
                    work[-1] = (v, k + 1)
                    work.append((u, 0))
                    recurse = True
                    break
                if onstack[u] and index[u] < low[v]:
                    low[v] = index[u]
            if recurse:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    u = sstack.pop()
                    onstack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                comp.sort()
                comps.append(comp)
            if work:
                p = work[-1][0]
                if low[v] < low[p]:
                    low[p] = low[v]
    comps.reverse()
    return comps


def induced_subgraph(g: WeightedDigraph, vertices):
    """Subgraph on the given vertices. Returns (sub, vmap, edge_ids) where
    vmap maps old vertex -> new (or -1) and edge_ids maps new edge -> old."""
    vs = sorted(set(int(v) for v in vertices))
    vmap = np.full(g.n, -1, dtype=np.int64)
    for i, v in enumerate(vs):
        vmap[v] = i
    keep = (vmap[g.tail] >= 0) & (vmap[g.head] >= 0)
    edge_ids = np.flatnonzero(keep).astype(np.int64)
    sub = WeightedDigraph(len(vs), vmap[g.tail[edge_ids]], vmap[g.head[edge_ids]],
                          g.w[edge_ids])
    return sub, vmap, edge_ids


def find_any_cycle_edges(g: WeightedDigraph):
    """Edge ids of some simple cycle, or None if the graph is acyclic
    (iterative DFS, first back edge to the active path closes a cycle)."""
    n = g.n
    color = np.zeros(n, dtype=np.int8)  # 0 white, 1 on path, 2 done
    pos = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if color[root] != 0:
            continue
        path_v: list[int] = []
        path_e: list[int] = []
        work = [(root, 0)]
        color[root] = 1
        pos[root] = 0
        path_v.append(root)
        while work:
            v, pi = work[-1]
            advanced = False
            for k in range(pi, g.out_degree(v)):
                e = int(g.out_eid[g.out_ptr[v] + k])
                u = int(g.head[e])
                if color[u] == 1:
                    q = pos[u]
                    return path_e[q:] + [e]
                if color[u] == 0:
                    work[-1] = (v, k + 1)
                    work.append((u, 0))
                    color[u] = 1
                    pos[u] = len(path_v)
                    path_v.append(u)
                    path_e.append(e)
                    advanced = True
                    break
            if advanced:
                continue
            work.pop()
            color[v] = 2
            pos[v] = -1
            path_v.pop()
            if path_e:
                path_e.pop()
    return None


def read_edge_list(path) -> WeightedDigraph:
    """Parse the text format: first line "n m", then m lines "u v w"."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().split()
        if len(first) != 2:
            raise ValueError("first line must be 'n m'")
        n, m = int(first[0]), int(first[1])
        tail = np.empty(m, dtype=np.int64)
        head = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.float64)
        for i in range(m):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise ValueError(f"edge line {i + 1}: expected 'u v w'")
            tail[i] = int(parts[0])
            head[i] = int(parts[1])
            w[i] = float(parts[2])
    return WeightedDigraph(n, tail, head, w)


def write_edge_list(g: WeightedDigraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for e in range(g.m):
            # repr of the Python float round-trips the exact value
            fh.write(f"{g.tail[e]} {g.head[e]} {float(g.w[e])!r}\n")
