"""Edge-indexed flows, cycles, and the imbalance/cost/entropy functionals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedDigraph

#: tolerance on total mass for unit-flow membership
MASS_TOL = 1e-9


class EdgeFlow:
    """Nonnegative per-edge mass, aligned with a graph's edge id order."""

    __slots__ = ("values", "total")

    def __init__(self, values):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.size and values.min() < 0.0:
            raise ValueError("flow entries must be nonnegative")
        self.values = values
        self.total = float(values.sum())

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def is_unit(self) -> bool:
        return abs(self.total - 1.0) <= MASS_TOL

    def __repr__(self) -> str:
        return f"EdgeFlow(m={self.m}, total={self.total:.12g})"


@dataclass(frozen=True)
class NetflowVector:
    """Per-vertex inflow minus outflow."""
    values: np.ndarray


@dataclass(frozen=True)
class Cycle:
    """A simple cycle as an ordered edge-id tuple with its mean weight.

    vertices[i] is the tail of edges[i]; consecutive edges chain head to
    tail and the last head returns to the first tail.
    """
    edges: tuple
    vertices: tuple
    mean_weight: float

    @classmethod
    def from_edges(cls, g: WeightedDigraph, edge_ids) -> "Cycle":
        ids = [int(e) for e in edge_ids]
        if not ids:
            raise ValueError("a cycle needs at least one edge")
        verts = [int(g.tail[e]) for e in ids]
        for k, e in enumerate(ids):
            nxt = verts[(k + 1) % len(ids)]
            if int(g.head[e]) != nxt:
                raise ValueError("edges do not chain head-to-tail")
        if len(set(verts)) != len(verts):
            raise ValueError("cycle revisits a vertex")
        mean = float(sum(g.w[e] for e in ids) / len(ids))
        return cls(tuple(ids), tuple(verts), mean)

    def __len__(self) -> int:
        return len(self.edges)


def netflow(g: WeightedDigraph, f: EdgeFlow) -> NetflowVector:
    """Inflow minus outflow at every vertex; entries sum to zero."""
    if f.m != g.m:
        raise ValueError("flow not aligned with graph edges")
    vals = (np.bincount(g.head, weights=f.values, minlength=g.n)
            - np.bincount(g.tail, weights=f.values, minlength=g.n))
    return NetflowVector(vals)


def imbalance(nf: NetflowVector) -> float:
    """l1 norm of the netflow; zero exactly when the flow is a circulation."""
    return float(np.abs(nf.values).sum())


def lp_cost(g: WeightedDigraph, f: EdgeFlow) -> float:
    if f.m != g.m:
        raise ValueError("flow not aligned with graph edges")
    return float(np.dot(f.values, g.w))


def entropy(p) -> float:
    """Shannon entropy -sum p log p with 0 log 0 = 0; p a probability vector."""
    p = np.asarray(p, dtype=np.float64)
    if p.size and p.min() < 0.0:
        raise ValueError("negative entry in probability vector")
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise ValueError("entries must sum to 1")
    pz = p[p > 0.0]
    return float(-np.dot(pz, np.log(pz)))


def softmin(a, eta: float) -> float:
    """-(1/eta) log sum exp(-eta a), max-shifted; +inf entries drop out.

    Underestimates min(a) by at most log(k)/eta.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    a = np.asarray(a, dtype=np.float64)
    finite = a[np.isfinite(a)]
    if finite.size == 0:
        raise ValueError("softmin needs at least one finite entry")
    b = -eta * finite
    mx = float(b.max())
    return -(mx + float(np.log(np.exp(b - mx).sum()))) / eta
