"""Min-mean-cycle approximation by dual extrapolation on the l1-penalized
saddle point min_{x in simplex} max_{y in [-1,1]^n} <x, w> + c y^T A x with
penalty scale c = 3 d~ w_max, using alternating-minimization proximal steps
(aprox) under an area-convex regularizer. The certified primal iterate P is
eps~-suboptimal for the penalized problem, hence <P, W> <= mu(G) + eps~ and
imb(P) <= eps~/(d~ w_max), and the shared rounding pipeline finishes it to a
cycle within eps of mu(G).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .flows import EdgeFlow
from .graph import WeightedDigraph, adiam, sp_tree_pair
from .rounding import round_cycle, round_qcirc
from .solver_bal import AllocMeter, SolveReport, _any_cycle_report

#: penalty scale c = PENALTY_COEFF * d~ * w_max (exact penalty needs > 2)
PENALTY_COEFF = 3.0
#: iteration budget 432 * d~ * w_max * log(m) / eps~
BUDGET_COEFF = 432.0


class Al1BudgetExceeded(RuntimeError):
    """Raised when the duality gap is still above eps~ at the iteration cap."""

    def __init__(self, gap: float, iters: int, passes: float):
        super().__init__(f"gap {gap:.3g} after {iters} iterations")
        self.gap = gap
        self.iters = iters
        self.passes = passes


class IncidenceOperator:
    """Signed edge-incidence actions of the graph, with pass counting.

    A column for edge (i, j) has -1 at i and +1 at j; a self-loop column is
    zero, in the unsigned |A| as well (a self-loop moves no netflow). apply
    agrees with netflow() exactly, operation for operation.
    """

    def __init__(self, g: WeightedDigraph):
        self.g = g
        self.nonloop = (g.tail != g.head).astype(np.float64)
        self.passes = 0.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        self.passes += 1.0
        return (np.bincount(self.g.head, weights=x, minlength=self.g.n)
                - np.bincount(self.g.tail, weights=x, minlength=self.g.n))

    def apply_t(self, y: np.ndarray) -> np.ndarray:
        self.passes += 1.0
        return y[self.g.head] - y[self.g.tail]

    def apply_abs(self, x: np.ndarray) -> np.ndarray:
        self.passes += 1.0
        xm = x * self.nonloop
        return (np.bincount(self.g.tail, weights=xm, minlength=self.g.n)
                + np.bincount(self.g.head, weights=xm, minlength=self.g.n))

    def apply_abs_t(self, y: np.ndarray) -> np.ndarray:
        self.passes += 1.0
        return (y[self.g.tail] + y[self.g.head]) * self.nonloop


@dataclass(frozen=True)
class SaddleState:
    """One dual-extrapolation state: s is the feasible certificate pair the
    gap is evaluated at, z and u the last proximal pairs, t the iteration.
    Primal halves live on the simplex, dual halves in [-1, 1]^n."""

    s: tuple[np.ndarray, np.ndarray]
    z: tuple[np.ndarray, np.ndarray]
    u: tuple[np.ndarray, np.ndarray]
    t: int
    c: float
    eps_tilde: float


def duality_gap(state: SaddleState, g: WeightedDigraph) -> float:
    """Primal penalized value at s^x minus the dual lower bound at s^y:
    <s^x, w> + c ||A s^x||_1 - min_k (w + c A^T s^y)_k. Nonnegative up to
    roundoff by weak duality."""
    sx, sy = state.s
    ax = (np.bincount(g.head, weights=sx, minlength=g.n)
          - np.bincount(g.tail, weights=sx, minlength=g.n))
    aty = sy[g.head] - sy[g.tail]
    return float((np.dot(sx, g.w) + state.c * np.abs(ax).sum())
                 - np.min(g.w + state.c * aty))


def aprox_rounds(c: float, eps_prime: float, n: int) -> int:
    """Round count ceil(log(c/eps') + log log n + 3), floored at one."""
    ratio = max(c / eps_prime, 1.0)
    return max(1, math.ceil(math.log(ratio) + math.log(math.log(max(n, 3))) + 3.0))


def aprox(A: IncidenceOperator, c: float, v: tuple[np.ndarray, np.ndarray],
          eps_prime: float, omega: float = 10.0, rounds: int | None = None):
    """Proximal subproblem solve: alternate y <- Trunc(-v^y / (2c |A| x)) and
    x <- softmax(-v^x/(omega c) - |A|^T y^2 / omega) until the joint l1
    movement drops below eps'/(4c) or the round cap. Zero divisors send the
    quotient to +-inf before truncation. Returns (x, y)."""
    if c <= 0.0:
        raise ValueError("aprox needs c > 0")
    g = A.g
    if rounds is None:
        rounds = aprox_rounds(c, eps_prime, g.n)
    x, y, passes = _kernels.aprox_kernel(v[0], v[1], g.tail, g.head,
                                         A.nonloop, g.n, c, eps_prime,
                                         omega, rounds)
    A.passes += passes
    return x, y


def al1(g: WeightedDigraph, eps_tilde: float, max_iters: int | None = None,
        step_scale: float = 1.0, omega: float = 10.0,
        stats: dict | None = None) -> EdgeFlow:
    """Run dual extrapolation until the duality gap certifies eps~.

    The default iteration cap is the budget 432 d~ w_max log(m) / eps~;
    exceeding it raises Al1BudgetExceeded with the last gap. On success the
    returned P satisfies <P, W> <= mu(G) + eps~ and imb(P) <= eps~/(d~ w_max).
    stats (optional dict) receives gap, iters, passes, cert_last, state,
    y, and gap_trace.
    """
    if eps_tilde <= 0.0:
        raise ValueError("eps_tilde must be positive")
    d_tilde = adiam(g).d_tilde
    c = PENALTY_COEFF * d_tilde * g.w_max
    if c == 0.0:
        # single vertex or all-zero weights: every feasible x is optimal
        x = np.full(g.m, 1.0 / g.m)
        y = np.zeros(g.n)
        if stats is not None:
            pair = (x, y)
            stats.update(gap=0.0, iters=0, passes=0.0, cert_last=0,
                         state=SaddleState(pair, pair, pair, 0, c, eps_tilde),
                         y=y, gap_trace=np.zeros(1))
        return EdgeFlow(x)
    if max_iters is None:
        max_iters = math.ceil(BUDGET_COEFF * d_tilde * g.w_max
                              * math.log(max(g.m, 2)) / eps_tilde)
    nonloop = (g.tail != g.head).astype(np.float64)
    rounds = aprox_rounds(c, 0.5 * eps_tilde, g.n)
    stride = max(1, (max_iters + 1) // (1 << 20) + 1)
    trace = np.full(max_iters // stride + 2, np.nan)
    px, py, gap, passes, iters, cert_last, zx, zy, ux, uy = _kernels.al1_kernel(
        g.tail, g.head, g.w, nonloop, g.n, c, eps_tilde, max_iters,
        rounds, omega, step_scale / 3.0, step_scale / 6.0, trace, stride)
    if stats is not None:
        stats.update(gap=float(gap), iters=int(iters), passes=float(passes),
                     cert_last=int(cert_last),
                     state=SaddleState((px, py), (zx, zy), (ux, uy),
                                       int(iters), c, eps_tilde),
                     y=py, gap_trace=trace[~np.isnan(trace)])
    if gap > eps_tilde:
        raise Al1BudgetExceeded(float(gap), int(iters), float(passes))
    return EdgeFlow(px)


def ammc_area(g: WeightedDigraph, eps: float, step_scale: float = 1.0,
              omega: float = 10.0) -> SolveReport:
    """Approximate MMC on a strongly connected graph via the saddle-point
    route: al1 at eps~ = eps/16, then quantized rounding at the full eps.
    The error budget eps/16 + eps/4 + 4 w_max d~ imb(P) stays under eps.

    The report reuses the balancing solver's shape: steps carries the
    extrapolation iteration count, eta and delta are not applicable, and the
    dual lower bound is min_k (w + c A^T y)_k at the certificate y.
    """
    t0 = time.perf_counter()
    meter = AllocMeter()
    if eps > 2.0 * g.w_max:
        return _any_cycle_report(g, t0, meter)
    d_tilde = adiam(g, meter=meter).d_tilde
    astats: dict = {}
    p = al1(g, eps / 16.0, step_scale=step_scale, omega=omega, stats=astats)
    state: SaddleState = astats["state"]
    y = astats["y"]
    dual_lb = float(np.min(g.w + state.c * (y[g.head] - y[g.tail])))
    trees = sp_tree_pair(g, 0, meter)
    qc = round_qcirc(g, p, eps, d_tilde, trees, meter=meter)
    cyc = round_cycle(g, qc, meter=meter)
    nf = (np.bincount(g.head, weights=p.values, minlength=g.n)
          - np.bincount(g.tail, weights=p.values, minlength=g.n))
    return SolveReport(
        cycle=cyc, mean_weight=cyc.mean_weight,
        imbalance_achieved=float(np.abs(nf).sum()),
        steps=astats["iters"], passes=astats["passes"],
        wall_ms=(time.perf_counter() - t0) * 1e3,
        dual_lower_bound=dual_lb, eta=math.nan, delta=math.nan,
        d_tilde=d_tilde, status="ok", memory_peak_entries=meter.peak)
