"""Near-linear-time approximation of the minimum mean cycle.

Two solver routes: ammc_bal regularizes entropically and reduces to matrix
balancing with random Osborne iterations; ammc_area runs dual extrapolation
on an l1-penalized saddle point under an area-convex regularizer. Both hand
a near-circulation to the shared quantized cycle-cancelling rounding, and
exact baselines (Karp, enumeration, Bellman-Ford) back the tests and
benchmarks.
"""

from ._kernels import BACKEND
from .balancing import (BalanceProblem, BalancedFlow, OsborneCapExceeded,
                        Potential, balance_summary, build_balanced_flow,
                        osborne_step, random_osborne)
from .baselines import (NegativeCycleError, PotentialQualityError, RelaxQueue,
                        SsspTree, bellman_ford, dijkstra, enumerate_cycles_mmc,
                        karp_mmc, list_simple_cycles, reduction_demo,
                        sssp_correct)
from .flows import (Cycle, EdgeFlow, NetflowVector, entropy, imbalance,
                    lp_cost, netflow, softmin)
from .generators import (gen_arbitrage_like, gen_circulation,
                         gen_int_no_neg_cycle, gen_near_circulation,
                         gen_pm1_complete, gen_random_sc, ring)
from .graph import (DiameterEstimate, GraphOracles, NoCycleError,
                    NotStronglyConnectedError, SpTreePair, WeightedDigraph,
                    adiam, bfs, find_any_cycle_edges, induced_subgraph,
                    read_edge_list, scc_decompose, sp_tree_pair,
                    write_edge_list)
from .rounding import (FlowAdjustmentLedger, QuantizedCirculation, quantum,
                       round_circ, round_cycle, round_pipeline, round_qcirc,
                       round_qcirc_oracle)
from .solver_area import (Al1BudgetExceeded, IncidenceOperator, SaddleState,
                          al1, ammc_area, aprox, duality_gap)
from .solver_bal import (AllocMeter, BalSolverConfig, SolveReport, ammc_bal,
                         solve_all_components, sweep_eta)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BalanceProblem", "BalancedFlow", "OsborneCapExceeded", "Potential",
    "balance_summary", "build_balanced_flow", "osborne_step", "random_osborne",
    "NegativeCycleError", "PotentialQualityError", "RelaxQueue", "SsspTree",
    "bellman_ford", "dijkstra", "enumerate_cycles_mmc", "karp_mmc",
    "list_simple_cycles", "reduction_demo", "sssp_correct",
    "Cycle", "EdgeFlow", "NetflowVector", "entropy", "imbalance", "lp_cost",
    "netflow", "softmin",
    "gen_arbitrage_like", "gen_circulation", "gen_int_no_neg_cycle",
    "gen_near_circulation", "gen_pm1_complete", "gen_random_sc", "ring",
    "DiameterEstimate", "GraphOracles", "NoCycleError",
    "NotStronglyConnectedError", "SpTreePair", "WeightedDigraph", "adiam",
    "bfs", "find_any_cycle_edges", "induced_subgraph", "read_edge_list",
    "scc_decompose", "sp_tree_pair", "write_edge_list",
    "FlowAdjustmentLedger", "QuantizedCirculation", "quantum", "round_circ",
    "round_cycle", "round_pipeline", "round_qcirc", "round_qcirc_oracle",
    "Al1BudgetExceeded", "IncidenceOperator", "SaddleState", "al1",
    "ammc_area", "aprox", "duality_gap",
    "AllocMeter", "BalSolverConfig", "SolveReport", "ammc_bal",
    "solve_all_components", "sweep_eta",
    "__version__",
]
