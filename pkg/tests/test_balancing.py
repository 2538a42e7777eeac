"""Matrix balancing: Osborne fixed points, stable flow construction, and
the duality identities the solver leans on."""

import math

import numpy as np
import pytest

from mmcycle import WeightedDigraph
from mmcycle.balancing import (
    BalanceProblem,
    BalancedFlow,
    OsborneCapExceeded,
    Potential,
    balance_summary,
    build_balanced_flow,
    osborne_step,
    random_osborne,
)
from mmcycle.baselines import karp_mmc
from mmcycle.flows import imbalance, netflow, softmin
from mmcycle.generators import gen_random_sc, ring
from mmcycle.graph import NotStronglyConnectedError, bfs


def two_cycle(a, b):
    return WeightedDigraph.from_edges(2, [(0, 1, a), (1, 0, b)])


def entries(g, x, eta):
    """Dense A entries exp(x_t - x_h - eta w); test-only, small graphs."""
    return np.exp(x[g.tail] - x[g.head] - eta * g.w)


def dense_imbalance(g, x, eta):
    a = entries(g, x, eta)
    r = np.bincount(g.tail, weights=a, minlength=g.n)
    c = np.bincount(g.head, weights=a, minlength=g.n)
    return float(np.abs(r - c).sum() / a.sum())


def gd_balance(g, eta, iters=20000):
    """Brute-force balancing oracle: gradient descent with backtracking on
    the convex objective sum_e exp(x_tail - x_head - eta w_e)."""
    x = np.zeros(g.n)

    def obj(v):
        return float(entries(g, v, eta).sum())

    f = obj(x)
    t = 1.0
    for _ in range(iters):
        a = entries(g, x, eta)
        grad = (np.bincount(g.tail, weights=a, minlength=g.n)
                - np.bincount(g.head, weights=a, minlength=g.n))
        grad -= grad.mean()  # gauge: objective is shift-invariant
        if float(np.abs(grad).max()) < 1e-15 * f:
            break
        while True:
            xn = x - t * grad
            fn = obj(xn)
            if fn <= f - 0.25 * t * float(grad @ grad) or t < 1e-18:
                break
            t *= 0.5
        x, f = xn, fn
        t *= 2.0
    return x


# ------------------------------------------------------------ BalanceProblem

def test_problem_validation_and_kappa_bound():
    g = two_cycle(0.3, 0.7)
    with pytest.raises(ValueError):
        BalanceProblem(g, 0.0, 0.1)
    with pytest.raises(ValueError):
        BalanceProblem(g, 1.0, 0.0)
    rng = np.random.default_rng(1)
    for _ in range(50):
        h = gen_random_sc(int(rng.integers(2, 9)), int(rng.integers(0, 12)),
                          seed=rng)
        eta = float(rng.uniform(0.5, 8.0))
        prob = BalanceProblem(h, eta, 0.1)
        np.testing.assert_array_equal(prob.log_k, -eta * h.w)
        log_kappa = eta * float(h.w.max() - h.w.min())
        assert log_kappa <= prob.log_kappa_bound + 1e-12


# ------------------------------------------------------------ random_osborne

def test_two_vertex_closed_form():
    a, b, eta = 0.7, 0.3, 2.0
    prob = BalanceProblem(two_cycle(a, b), eta, 1e-12)
    pot = random_osborne(prob, rng_seed=0)
    gap = float(pot.x[0] - pot.x[1])
    assert gap == pytest.approx(eta * (a - b) / 2.0, abs=1e-12)
    bf = build_balanced_flow(pot, prob, no_drop=True)
    np.testing.assert_allclose(bf.flow.values, [0.5, 0.5], atol=1e-15)
    assert bf.log_sum_a == pytest.approx(
        math.log(2.0) - eta * (a + b) / 2.0, abs=1e-12)


def test_symmetric_weights_accepted_at_iteration_zero():
    g = WeightedDigraph.from_edges(
        3, [(0, 1, 0.4), (1, 0, 0.4), (1, 2, -0.2), (2, 1, -0.2),
            (0, 2, 0.9), (2, 0, 0.9)])
    stats = {}
    pot = random_osborne(BalanceProblem(g, 3.0, 1e-9), 0, stats=stats)
    np.testing.assert_array_equal(pot.x, np.zeros(3))
    assert stats["steps"] == 0 and stats["passes"] == 0.0


def test_three_cycle_against_gradient_descent_oracle():
    rng = np.random.default_rng(37)
    for trial in range(10):
        w = rng.uniform(-1.0, 1.0, size=3)
        g = ring(3, w=w)
        eta = float(rng.uniform(0.5, 4.0))
        delta = 1e-10
        prob = BalanceProblem(g, eta, delta)
        pot = random_osborne(prob, rng_seed=trial)
        assert dense_imbalance(g, pot.x, eta) <= delta
        x_gd = gd_balance(g, eta)
        p_os = build_balanced_flow(pot, prob, no_drop=True).flow.values
        a_gd = entries(g, x_gd, eta)
        np.testing.assert_allclose(p_os, a_gd / a_gd.sum(), atol=1e-6)
        # a 3-cycle balances to three equal entries
        np.testing.assert_allclose(p_os, np.full(3, 1.0 / 3.0), atol=1e-6)


def test_osborne_postconditions_on_random_instances():
    rng = np.random.default_rng(41)
    for trial in range(30):
        g = gen_random_sc(int(rng.integers(2, 10)), int(rng.integers(0, 15)),
                          seed=rng)
        eta = float(rng.uniform(0.5, 6.0))
        delta = float(rng.uniform(1e-4, 0.05))
        prob = BalanceProblem(g, eta, delta)
        stats = {}
        pot = random_osborne(prob, rng_seed=trial, stats=stats)
        assert stats["imbalance"] <= delta
        assert dense_imbalance(g, pot.x, eta) <= delta * (1.0 + 1e-9)
        # sum(A) <= sum(K), checked in the log domain
        log_sum_k = -eta * softmin(g.w, eta)
        assert stats["log_sum_a"] <= log_sum_k + 1e-9


def test_osborne_rejects_unbalanceable_graphs():
    g = WeightedDigraph.from_edges(3, [(0, 1, 0.0), (1, 0, 0.0), (2, 0, 0.0)])
    with pytest.raises(NotStronglyConnectedError):
        random_osborne(BalanceProblem(g, 1.0, 0.01), 0)


def test_osborne_degenerate_delta_and_budget_paths():
    g = two_cycle(0.9, 0.1)
    stats = {}
    pot = random_osborne(BalanceProblem(g, 5.0, 2.5), 0, stats=stats)
    np.testing.assert_array_equal(pot.x, np.zeros(2))
    assert stats["steps"] == 0
    stats = {}
    random_osborne(BalanceProblem(g, 5.0, 1e-9), 0, max_passes=0.0,
                   stats=stats)
    assert stats["budget_exhausted"]


def test_osborne_cap_diagnostic(monkeypatch):
    import mmcycle.balancing as bal
    monkeypatch.setattr(bal, "_step_cap", lambda m, n, delta: 0)
    with pytest.raises(OsborneCapExceeded) as exc:
        random_osborne(BalanceProblem(two_cycle(0.9, 0.1), 5.0, 1e-9), 0)
    assert exc.value.imbalance > 0.0
    assert exc.value.x.shape == (2,)


# -------------------------------------------------------------- osborne_step

def test_osborne_step_two_by_two_exact_in_one_step():
    a, b, eta = 0.7, 0.3, 2.0
    prob = BalanceProblem(two_cycle(a, b), eta, 1e-12)
    pot = osborne_step(Potential(np.zeros(2)), 0, prob)
    assert pot.x[0] == pytest.approx(eta * (a - b) / 2.0, abs=1e-14)
    assert dense_imbalance(prob.graph, pot.x, eta) <= 1e-14


def test_osborne_step_identity_when_balanced_and_locality():
    g = WeightedDigraph.from_edges(
        4, [(0, 1, 0.2), (1, 0, 0.2), (1, 2, 0.5), (2, 1, 0.5),
            (2, 3, -0.1), (3, 2, -0.1)])
    prob = BalanceProblem(g, 2.0, 0.1)
    x0 = Potential(np.zeros(4))
    x1 = osborne_step(x0, 1, prob)  # symmetric: r_1 = c_1 already
    np.testing.assert_array_equal(x1.x, x0.x)
    rng = np.random.default_rng(5)
    xr = Potential(rng.normal(size=4))
    x2 = osborne_step(xr, 2, prob)
    others = [0, 1, 3]
    np.testing.assert_array_equal(x2.x[others], xr.x[others])


def test_osborne_step_requires_both_directions():
    g = WeightedDigraph.from_edges(3, [(0, 1, 0.0), (1, 0, 0.0), (0, 2, 0.0)])
    prob = BalanceProblem(g, 1.0, 0.1)
    with pytest.raises(ValueError):
        osborne_step(Potential(np.zeros(3)), 2, prob)


def test_sum_a_monotone_across_steps():
    rng = np.random.default_rng(43)
    g = gen_random_sc(6, 10, seed=9)
    prob = BalanceProblem(g, 3.0, 1e-9)
    pot = Potential(rng.normal(scale=0.5, size=6))
    prev = balance_summary(pot.x, prob, no_drop=True)[4]
    for _ in range(60):
        i = int(rng.integers(6))
        pot = osborne_step(pot, i, prob)
        cur = balance_summary(pot.x, prob, no_drop=True)[4]
        assert cur <= prev + 1e-12
        prev = cur


# ------------------------------------------------------- build_balanced_flow

def test_build_frozen_examples():
    g = WeightedDigraph.from_edges(
        3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5), (0, 2, 0.5)])
    prob = BalanceProblem(g, 2.0, 0.1)
    bf = build_balanced_flow(Potential(np.zeros(3)), prob)
    np.testing.assert_array_equal(bf.flow.values, np.full(4, 0.25))
    assert bf.flow.is_unit() and bf.dropped == 0


def test_build_translation_invariance_bit_exact():
    rng = np.random.default_rng(47)
    g = gen_random_sc(7, 11, seed=2)
    prob = BalanceProblem(g, 2.5, 0.01)
    # dyadic-grid x keeps x + c exact in floats, so the max-shift cancels c
    x = np.round(rng.normal(size=7) * 2.0 ** 20) / 2.0 ** 20
    base = build_balanced_flow(Potential(x), prob)
    for c in (1.0, 4.0, -2.5):
        shifted = build_balanced_flow(Potential(x + c), prob)
        np.testing.assert_array_equal(shifted.flow.values, base.flow.values)
        assert shifted.log_sum_a == base.log_sum_a


def test_build_drop_threshold_stays_near_undropped():
    g = gen_random_sc(8, 20, seed=6)
    prob = BalanceProblem(g, 8.0, 0.05)
    pot = random_osborne(prob, 0)
    full = build_balanced_flow(pot, prob, no_drop=True)
    cut = build_balanced_flow(pot, prob)
    assert cut.flow.is_unit()
    assert float(np.abs(cut.flow.values - full.flow.values).sum()) <= prob.delta
    assert cut.dropped == int(np.count_nonzero(cut.flow.values == 0.0))


def test_balance_summary_matches_dense_build():
    g = gen_random_sc(6, 9, seed=8)
    prob = BalanceProblem(g, 3.0, 0.02)
    pot = random_osborne(prob, 3)
    ymax, s_all, s_kept, log_alpha, log_sum_a = balance_summary(pot.x, prob)
    bf = build_balanced_flow(pot, prob)
    assert log_sum_a == bf.log_sum_a
    a = entries(g, pot.x, prob.eta)
    assert log_sum_a == pytest.approx(math.log(a.sum()), abs=1e-10)


# ------------------------------------------------------------ dual identities

def test_duality_gap_identity():
    rng = np.random.default_rng(53)
    for trial in range(60):
        g = gen_random_sc(int(rng.integers(2, 9)), int(rng.integers(0, 12)),
                          seed=rng)
        eta = float(rng.uniform(0.5, 6.0))
        prob = BalanceProblem(g, eta, 0.05)
        if trial % 2:
            x = rng.normal(scale=0.8, size=g.n)
        else:
            x = random_osborne(prob, trial).x
        bf = build_balanced_flow(Potential(x), prob, no_drop=True)
        p = bf.flow.values
        pz = p[p > 0.0]
        ent = float(-np.dot(pz, np.log(pz)))
        cost = float(np.dot(p, g.w))
        out_minus_in = (np.bincount(g.tail, weights=p, minlength=g.n)
                        - np.bincount(g.head, weights=p, minlength=g.n))
        lhs = cost - ent / eta
        rhs = -bf.log_sum_a / eta + float(np.dot(x, out_minus_in)) / eta
        assert abs(lhs - rhs) <= 1e-8


def test_log_sum_a_lower_bounds_mmc():
    rng = np.random.default_rng(59)
    for trial in range(100):
        g = gen_random_sc(int(rng.integers(2, 8)), int(rng.integers(0, 10)),
                          seed=rng)
        eta = float(rng.uniform(1.0, 8.0))
        prob = BalanceProblem(g, eta, 0.05)
        x = rng.normal(scale=1.0, size=g.n)
        log_sum_a = balance_summary(x, prob, no_drop=True)[4]
        mu, _ = karp_mmc(g)
        assert -log_sum_a / eta <= mu + 1e-9


def test_conditioning_of_accepted_balancings():
    rng = np.random.default_rng(61)
    for trial in range(25):
        g = gen_random_sc(int(rng.integers(2, 8)), int(rng.integers(0, 10)),
                          seed=rng)
        eta = float(rng.uniform(0.5, 5.0))
        prob = BalanceProblem(g, eta, 0.01)
        pot = random_osborne(prob, trial)
        dists = np.stack([bfs(g, s, "out")[0] for s in range(g.n)])
        d = int(dists.max())
        spread = float(pot.x.max() - pot.x.min())
        assert spread <= max(d, 1) * prob.log_kappa_bound + 1e-9
