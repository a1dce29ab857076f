"""Simulator and analytics toolkit for the budget-constrained online
graph-building process.

One vertex set, a uniformly random ordering of all possible edges, and a
builder who sees each edge as it arrives and must immediately buy it or let
it pass. The package simulates purchase strategies aimed at reaching minimum
degree k the moment the underlying exposed graph itself reaches it, and
provides the exact asymptotic densities those strategies are measured
against.
"""
from .analytics import (
    expected_rank_pair_count,
    hitting_time_estimate,
    knn_edge_density,
    overlap_series,
    poisson_degree_fraction,
    rank_pair_cells,
    rank_pair_density,
)
from .process import (
    Edge,
    EdgeStream,
    ProcessState,
    RankPairTable,
    StepRecord,
    StreamMode,
    connectivity_hitting,
    hitting_reached,
    new_stream,
)
from .strategies import StrategyConfig, StrategyKind, StrategyState, decide
from .harness import (
    Aggregate,
    RunConfig,
    TraceResult,
    TrialResult,
    degree_experiment,
    derive_trial_seed,
    enumerate_exact,
    last_covered_experiment,
    phi_experiment,
    run_trial,
    run_trials,
    success_prob_experiment,
    trace_experiment,
    wilson_interval,
    write_csv,
    write_ndjson,
)

__version__ = "0.1.0"

__all__ = [
    "Aggregate",
    "Edge",
    "EdgeStream",
    "ProcessState",
    "RankPairTable",
    "RunConfig",
    "StepRecord",
    "StrategyConfig",
    "StrategyKind",
    "StrategyState",
    "StreamMode",
    "TraceResult",
    "TrialResult",
    "connectivity_hitting",
    "decide",
    "degree_experiment",
    "derive_trial_seed",
    "enumerate_exact",
    "expected_rank_pair_count",
    "hitting_time_estimate",
    "knn_edge_density",
    "last_covered_experiment",
    "new_stream",
    "overlap_series",
    "phi_experiment",
    "poisson_degree_fraction",
    "rank_pair_cells",
    "rank_pair_density",
    "run_trial",
    "run_trials",
    "success_prob_experiment",
    "trace_experiment",
    "wilson_interval",
    "write_csv",
    "write_ndjson",
]
