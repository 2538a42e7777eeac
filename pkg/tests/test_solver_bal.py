"""End-to-end balancing solver: accuracy, dual bounds, memory modes, and
per-component dispatch."""

import math

import numpy as np
import pytest

from mmcycle import WeightedDigraph
from mmcycle.baselines import karp_mmc
from mmcycle.generators import gen_arbitrage_like, gen_random_sc
from mmcycle.solver_bal import (
    AllocMeter,
    BalSolverConfig,
    SolveReport,
    ammc_bal,
    solve_all_components,
    sweep_eta,
)


def test_config_validation():
    with pytest.raises(ValueError):
        BalSolverConfig(eps=0.0)
    with pytest.raises(ValueError):
        BalSolverConfig(eps=0.1, memory_mode="ram")
    assert BalSolverConfig(eps=0.1).memory_mode == "dense"


def test_alloc_meter_accounting():
    meter = AllocMeter()
    a = meter.array(10, np.int64, fill=0)
    assert a.dtype == np.int64 and a.shape == (10,)
    meter.transient(5)
    meter.array(3)
    assert meter.current == 13
    assert meter.peak == 15
    assert meter.total == 18


def test_self_loop_graph_any_eps():
    g = WeightedDigraph.from_edges(1, [(0, 0, 3.0)])
    for eps in (0.1, 1.0, 10.0):
        rep = ammc_bal(g, BalSolverConfig(eps=eps))
        assert rep.cycle.vertices == (0,)
        assert rep.mean_weight == 3.0
        assert rep.dual_lower_bound <= rep.mean_weight


def test_fast_path_large_eps():
    g = gen_random_sc(6, 8, seed=1, w_lo=-0.2, w_hi=0.2)
    rep = ammc_bal(g, BalSolverConfig(eps=1.0))  # eps > 2 w_max
    assert rep.status == "any_cycle"
    assert math.isnan(rep.eta) and math.isnan(rep.delta)
    assert rep.d_tilde == -1
    assert rep.dual_lower_bound == -g.w_max
    mu, _ = karp_mmc(g)
    assert mu <= rep.mean_weight <= mu + 1.0


def test_end_to_end_accuracy_against_karp():
    rng = np.random.default_rng(79)
    for trial in range(20):
        g = gen_random_sc(int(rng.integers(3, 8)), int(rng.integers(2, 12)),
                          seed=rng, w_lo=-0.6, w_hi=0.8)
        if g.w_max == 0.0:
            continue
        mu, _ = karp_mmc(g)
        for frac in (0.5, 0.1):
            eps = frac * g.w_max
            rep = ammc_bal(g, BalSolverConfig(eps=eps, seed=trial))
            assert rep.status == "ok"
            # lower slack: the cycle's mean and Karp's table sum the same
            # weights in different orders
            assert -1e-12 <= rep.mean_weight - mu <= eps + 1e-12
            assert rep.dual_lower_bound <= mu + 1e-9
            assert rep.imbalance_achieved <= rep.delta
            assert rep.eta == 2.5 * math.log(max(g.m, 2)) / eps


def test_planted_instance_within_eps():
    g, planted = gen_arbitrage_like(8, seed=5, delete_frac=0.0)
    mu, _ = karp_mmc(g)
    rep = ammc_bal(g, BalSolverConfig(eps=0.05, seed=0))
    assert -1e-12 <= rep.mean_weight - mu <= 0.05 + 1e-12
    assert rep.mean_weight <= planted + 0.05 + 1e-12


def test_multiplicative_mode_on_positive_weights():
    rng = np.random.default_rng(83)
    for trial in range(10):
        g = gen_random_sc(int(rng.integers(3, 8)), int(rng.integers(2, 10)),
                          seed=rng, w_lo=0.2, w_hi=1.0)
        w_min = float(g.w.min())
        eps_rel = 0.25
        mu, _ = karp_mmc(g)
        rep = ammc_bal(g, BalSolverConfig(eps=eps_rel * w_min, seed=trial))
        assert rep.mean_weight <= (1.0 + eps_rel) * mu + 1e-12


def test_eta_override_recorded():
    g = gen_random_sc(6, 8, seed=2, w_lo=-0.5, w_hi=0.9)
    rep = ammc_bal(g, BalSolverConfig(eps=0.2 * g.w_max, eta_override=50.0))
    assert rep.eta == 50.0


def test_oracle_mode_matches_dense_and_stays_linear_memory():
    peaks = {}
    for n in (32, 64, 128):
        g = gen_random_sc(n, 3 * n, seed=n, w_lo=-0.5, w_hi=1.0)
        eps = 0.3 * g.w_max
        dense = ammc_bal(g, BalSolverConfig(eps=eps, seed=7))
        oracle = ammc_bal(g, BalSolverConfig(eps=eps, seed=7,
                                             memory_mode="oracle"))
        assert oracle.cycle.edges == dense.cycle.edges
        assert oracle.mean_weight == dense.mean_weight
        assert oracle.dual_lower_bound == dense.dual_lower_bound
        peaks[n] = oracle.memory_peak_entries
        assert oracle.memory_peak_entries <= 40 * n
        assert dense.memory_peak_entries >= g.m  # dense really holds P
    # doubling n at m = 3n keeps the per-vertex footprint flat
    assert peaks[128] <= 2.2 * peaks[64]


def test_cap_exceeded_partial_report(monkeypatch):
    import mmcycle.balancing as bal
    monkeypatch.setattr(bal, "_step_cap", lambda m, n, delta: 0)
    g = gen_random_sc(6, 8, seed=3, w_lo=-0.5, w_hi=0.9)
    rep = ammc_bal(g, BalSolverConfig(eps=0.1 * g.w_max))
    assert rep.status == "cap_exceeded"
    assert rep.cycle is None and math.isnan(rep.mean_weight)
    assert rep.imbalance_achieved > 0.0


def test_components_dag_and_disjoint_cycles():
    dag = WeightedDigraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    best, reports = solve_all_components(dag, BalSolverConfig(eps=0.1))
    assert best is None and reports == []

    two = WeightedDigraph.from_edges(
        5, [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 2.0), (3, 2, 2.0), (1, 2, 9.0)])
    best, reports = solve_all_components(two, BalSolverConfig(eps=0.5))
    assert len(reports) == 2
    assert best.mean_weight == pytest.approx(1.0, abs=0.5)
    assert sorted(best.cycle.vertices) == [0, 1]
    for rep in reports:
        for e in rep.cycle.edges:
            assert 0 <= e < two.m  # lifted to input edge ids


def test_components_mixed_dag_plus_scc():
    g = WeightedDigraph.from_edges(
        5, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, -0.25), (3, 2, 0.75), (3, 4, 1.0)])
    best, reports = solve_all_components(g, BalSolverConfig(eps=0.2))
    assert len(reports) == 1
    assert sorted(best.cycle.vertices) == [2, 3]
    assert best.mean_weight == 0.25
    mu, _ = karp_mmc(WeightedDigraph.from_edges(
        2, [(0, 1, -0.25), (1, 0, 0.75)]))
    assert abs(best.mean_weight - mu) <= 0.2


def test_sweep_eta_rows_and_budget():
    g, _ = gen_arbitrage_like(8, seed=0, delete_frac=0.0)
    rows = sweep_eta(g, etas=[8.0, 64.0], pass_budget=1500.0, seeds=[0, 1, 2])
    assert len(rows) == 6
    for row in rows:
        assert set(row) == {"eta", "seed", "passes", "wall_ms", "err"}
        assert row["passes"] <= 1500.0 + 2.0
        assert row["err"] >= -1e-9
    med = {eta: float(np.median([r["err"] for r in rows if r["eta"] == eta]))
           for eta in (8.0, 64.0)}
    assert med[64.0] <= med[8.0] + 1e-12  # finer eta, tighter cost at budget
