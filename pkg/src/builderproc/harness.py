"""Monte Carlo runner, exact small-instance oracle, and experiments.

Seeding protocol (documented contract, relied on by the determinism tests):
the per-trial 64-bit seed is ``SeedSequence((master_seed, trial_index))``
collapsed to one uint64, and each trial builds ``default_rng(seed)`` (PCG64)
from it. A trial therefore depends only on (config, master_seed, index),
never on scheduling, worker count, or buffer sizes. Raw vertex draws are
taken from ``Generator.integers(0, n)``, whose output stream is identical
whether requested in one large block or in chunks, so the compiled kernel
(one big buffer) and the reference objects (chunked buffer) walk the same
trajectory; a too-short buffer is retried longer from the same seed and
replays the identical prefix.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from . import kernels
from ._accel import active
from .kernels import (
    OUT_CONNECT_STEP,
    OUT_DRAWS_USED,
    OUT_EFFICIENT,
    OUT_FIRST_INC_PURCHASED,
    OUT_FIRST_INC_TOTAL,
    OUT_HIT_STEP,
    OUT_INEFFICIENT,
    OUT_MAX_SKIPPED,
    OUT_MIN_BUILDER_AT_HIT,
    OUT_MIN_BUILDER_FINAL,
    OUT_PHASE_END_REACHED,
    OUT_PURCHASES,
    OUT_PURCHASES_PE,
    OUT_RANK_OVERFLOW,
    OUT_SELF_DRAWS,
    OUT_SIZE,
    OUT_SKIPPED_PE,
    OUT_STATUS,
    OUT_STEPS,
    OUT_TOUCHED_PE,
    OUT_TRACE_ROWS,
    OUT_UNDERFULL_FINAL,
    OUT_UNDERFULL_PE,
    OUT_UNSEEN_PE,
    OUT_REP_DRAWS,
    TR_COLS,
    TR_FIRST_INC,
    TR_FIRST_INC_PURCHASED,
    TR_PURCHASES,
    TR_SKIPPED,
    TR_STEP,
    TR_TOUCHED,
    TR_UNDERFULL,
    TR_UNSEEN,
    next_prime,
)
from .process import (
    FULL_PERMUTATION_LIMIT,
    ProcessState,
    StreamExhausted,
    StreamMode,
    full_permutation_arrays,
    new_stream,
    phase_horizon,
)
from .strategies import (
    KIND_CODES,
    StrategyConfig,
    StrategyKind,
    StrategyState,
    decide_with_tag,
    update_sets,
)

_WILSON_Z = 1.959963984540054  # two-sided 95%


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Collapse (master seed, trial index) into one independent 64-bit seed."""
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    if trial_index < 0:
        raise ValueError("trial_index must be non-negative")
    seq = np.random.SeedSequence((master_seed, trial_index))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RunConfig:
    """Everything one trial needs besides its seed.

    horizon forces a phase-snapshot step for strategies that have no C of
    their own; when the strategy is phased the two must agree. fixed_steps
    runs exactly that many exposures instead of stopping at the degree
    hitting time; it cannot be combined with track_connectivity.
    reference=True selects the pure-python object path instead of the
    kernel (identical results, used for cross-validation).
    """

    n: int
    strategy: StrategyConfig
    stream_mode: StreamMode = StreamMode.REJECTION_COUPLED
    track_connectivity: bool = False
    fixed_steps: int = 0
    checkpoints: tuple[int, ...] = ()
    rank_cap: int = 0
    horizon: int = 0
    reference: bool = False
    debug: bool = False

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not isinstance(self.strategy, StrategyConfig):
            raise ValueError("strategy must be a StrategyConfig")
        if self.strategy.k >= self.n:
            raise ValueError("strategy degree target must be smaller than n")
        object.__setattr__(self, "stream_mode", StreamMode(self.stream_mode))
        if self.stream_mode is StreamMode.FULL_PERMUTATION and self.n > FULL_PERMUTATION_LIMIT:
            raise ValueError(
                f"full-permutation mode is limited to n <= {FULL_PERMUTATION_LIMIT}"
            )
        total = self.n * (self.n - 1) // 2
        if self.fixed_steps < 0 or self.fixed_steps > total:
            raise ValueError("fixed_steps must lie in [0, n(n-1)/2]")
        if self.fixed_steps and self.track_connectivity:
            raise ValueError("fixed_steps cannot be combined with track_connectivity")
        if self.rank_cap < 0:
            raise ValueError("rank_cap must be non-negative")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        strategy_pe = self.strategy.phase_end(self.n)
        if self.horizon and strategy_pe and self.horizon != strategy_pe:
            raise ValueError(
                f"horizon {self.horizon} conflicts with the strategy's phase"
                f" horizon {strategy_pe}"
            )
        pe = self.effective_phase_end()
        if self.fixed_steps and pe and self.fixed_steps < pe:
            raise ValueError("fixed_steps must reach the phase horizon")
        cps = tuple(int(c) for c in self.checkpoints)
        object.__setattr__(self, "checkpoints", cps)
        if cps:
            if pe == 0:
                raise ValueError("checkpoints require a phase horizon")
            if list(cps) != sorted(set(cps)):
                raise ValueError("checkpoints must be strictly increasing")
            if cps[0] < 1 or cps[-1] > pe:
                raise ValueError("checkpoints must lie within [1, phase horizon]")

    def effective_phase_end(self) -> int:
        strategy_pe = self.strategy.phase_end(self.n)
        return strategy_pe if strategy_pe else self.horizon


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one trial. Step fields are -1 where not applicable.

    hitting_step is the first step at which the exposed graph has minimum
    degree k; connect_step the first step at which it is connected (tracked
    only on request). The *_at_phase_end fields snapshot the vertex classes
    at the phase horizon: touched (builder degree >= 1), skipped
    (builder-isolated but exposed-covered), unseen (exposed-isolated),
    underfull (builder degree < k). success means the builder graph itself
    reached minimum degree k by the hitting step.
    """

    trial_index: int
    seed: int
    n: int
    k: int
    hitting_step: int
    connect_step: int
    purchases: int
    min_builder_deg_at_hit: int
    success: bool
    efficient_count: int
    inefficient_count: int
    touched_at_phase_end: int
    skipped_at_phase_end: int
    unseen_at_phase_end: int
    underfull_at_phase_end: int
    max_skipped: int
    purchases_at_phase_end: int
    phase_end: int
    steps: int
    repetition_draws: int
    self_draws: int
    min_builder_deg_final: int
    underfull_final: int
    first_incident_edges: int
    first_incident_purchased: int
    rank_overflow: int
    rank_pair_counts: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "rank_pair_counts":
                value = {f"{r},{s}": c for (r, s), c in sorted(value.items())}
            out[f.name] = value
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "TrialResult":
        data = dict(data)
        cells = {}
        for key, count in data.get("rank_pair_counts", {}).items():
            r, s = key.split(",")
            cells[(int(r), int(s))] = count
        data["rank_pair_counts"] = cells
        return cls(**data)


# scalar columns, in the fixed order used by the CSV writer
CSV_COLUMNS = [f.name for f in fields(TrialResult) if f.name != "rank_pair_counts"]

_AGG_FIELDS = [
    "hitting_step",
    "connect_step",
    "purchases",
    "min_builder_deg_at_hit",
    "efficient_count",
    "inefficient_count",
    "touched_at_phase_end",
    "skipped_at_phase_end",
    "unseen_at_phase_end",
    "underfull_at_phase_end",
    "max_skipped",
    "purchases_at_phase_end",
    "steps",
    "repetition_draws",
    "self_draws",
    "min_builder_deg_final",
    "underfull_final",
    "first_incident_edges",
    "first_incident_purchased",
]


def wilson_interval(successes: int, trials: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion, clipped to [0, 1]."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class Aggregate:
    """Order-insensitive summary of a batch of trials."""

    trials: int
    n: int
    success_count: int
    success_rate: float
    wilson_low: float
    wilson_high: float
    field_means: dict
    field_stddevs: dict
    rank_pair_density_means: dict
    results: tuple


def _aggregate(results: list[TrialResult], n: int) -> Aggregate:
    ordered = sorted(results, key=lambda r: r.trial_index)
    trials = len(ordered)
    means = {}
    stds = {}
    for name in _AGG_FIELDS:
        values = [float(getattr(r, name)) for r in ordered]
        mean = sum(values) / trials
        if trials > 1:
            var = sum((v - mean) ** 2 for v in values) / (trials - 1)
        else:
            var = 0.0
        means[name] = mean
        stds[name] = math.sqrt(var)
    successes = sum(1 for r in ordered if r.success)
    lo, hi = wilson_interval(successes, trials)
    cell_totals: dict = {}
    for r in ordered:
        for cell, count in r.rank_pair_counts.items():
            cell_totals[cell] = cell_totals.get(cell, 0) + count
    densities = {cell: total / (trials * n) for cell, total in sorted(cell_totals.items())}
    return Aggregate(
        trials=trials,
        n=n,
        success_count=successes,
        success_rate=successes / trials,
        wilson_low=lo,
        wilson_high=hi,
        field_means=means,
        field_stddevs=stds,
        rank_pair_density_means=densities,
        results=tuple(ordered),
    )


def _step_budget(config: RunConfig) -> int:
    n = config.n
    k = config.strategy.k
    loglog = math.log(math.log(n)) if n >= 3 else 0.0
    loglog = max(0.0, loglog)
    est = 0.5 * n * (math.log(n) + (k - 1) * loglog)
    target = int(est) + 5 * n
    pe = config.effective_phase_end()
    target = max(target, pe, config.fixed_steps)
    return target + 64


_EMPTY_I64 = np.empty(0, dtype=np.int64)

# Flat slack added to every raw-draw buffer. Generous because a retry costs
# a full regeneration; small runs are dominated by this constant, which is
# still only 32KB of int64.
_DRAW_SLACK = 4096


def _run_trial_fast(config: RunConfig, trial_seed: int, trial_index: int) -> TrialResult:
    n = config.n
    strat = config.strategy
    kind_code = KIND_CODES[strat.kind]
    pe = config.effective_phase_end()
    total_edges = n * (n - 1) // 2
    steps_needed = _step_budget(config)
    rejection = config.stream_mode is StreamMode.REJECTION_COUPLED
    checkpoints = np.asarray(config.checkpoints, dtype=np.int64)
    cap = config.rank_cap
    cap1 = cap + 1
    kernel = active(kernels.trial_kernel)

    if rejection:
        draw_count = 2 * math.ceil(1.06 * min(steps_needed, total_edges)) + _DRAW_SLACK
    else:
        eu, ev = full_permutation_arrays(n, trial_seed)

    attempts = 0
    while True:
        attempts += 1
        if attempts > 40:
            raise RuntimeError("trial did not finish within the draw budget")
        exposed = np.zeros(n, dtype=np.int64)
        builder = np.zeros(n, dtype=np.int64)
        parent = np.arange(n, dtype=np.int64)
        out = np.full(OUT_SIZE, -1, dtype=np.int64)
        out[OUT_STATUS] = 0
        out[OUT_PHASE_END_REACHED] = 0
        rank_counts = np.zeros(max(cap1 * cap1, 1), dtype=np.int64)
        trace = np.zeros((len(checkpoints), TR_COLS), dtype=np.int64)
        if rejection:
            rng = np.random.default_rng(trial_seed)
            draws = rng.integers(0, n, size=draw_count, dtype=np.int64)
            # sized with the draw buffer so the load factor stays below 1/2
            # even if every drawn pair were a distinct edge
            table = np.full(next_prime(min(draw_count, 2 * total_edges) + 17), -1, dtype=np.int64)
            eu = ev = _EMPTY_I64
            mode = 0
        else:
            draws = _EMPTY_I64
            table = np.full(1, -1, dtype=np.int64)
            mode = 1
        kernel(
            n, kind_code, strat.k, pe, mode, draws, eu, ev,
            config.fixed_steps, pe, 1 if config.track_connectivity else 0, cap,
            checkpoints, parent, table, exposed, builder,
            rank_counts, trace, out,
        )
        if out[OUT_STATUS] == 0:
            break
        if not rejection:
            raise RuntimeError("edge list exhausted before the run completed")
        draw_count *= 2

    cells = {}
    if cap > 0:
        nz = np.nonzero(rank_counts)[0]
        for flat in nz:
            cells[(int(flat) // cap1, int(flat) % cap1)] = int(rank_counts[flat])

    hit = int(out[OUT_HIT_STEP])
    min_at_hit = int(out[OUT_MIN_BUILDER_AT_HIT])
    result = TrialResult(
        trial_index=trial_index,
        seed=trial_seed,
        n=n,
        k=strat.k,
        hitting_step=hit,
        connect_step=int(out[OUT_CONNECT_STEP]),
        purchases=int(out[OUT_PURCHASES]),
        min_builder_deg_at_hit=min_at_hit,
        success=hit >= 0 and min_at_hit >= strat.k,
        efficient_count=int(out[OUT_EFFICIENT]),
        inefficient_count=int(out[OUT_INEFFICIENT]),
        touched_at_phase_end=int(out[OUT_TOUCHED_PE]),
        skipped_at_phase_end=int(out[OUT_SKIPPED_PE]),
        unseen_at_phase_end=int(out[OUT_UNSEEN_PE]),
        underfull_at_phase_end=int(out[OUT_UNDERFULL_PE]),
        max_skipped=int(out[OUT_MAX_SKIPPED]),
        purchases_at_phase_end=int(out[OUT_PURCHASES_PE]),
        phase_end=pe,
        steps=int(out[OUT_STEPS]),
        repetition_draws=int(out[OUT_REP_DRAWS]),
        self_draws=int(out[OUT_SELF_DRAWS]),
        min_builder_deg_final=int(out[OUT_MIN_BUILDER_FINAL]),
        underfull_final=int(out[OUT_UNDERFULL_FINAL]),
        first_incident_edges=int(out[OUT_FIRST_INC_TOTAL]),
        first_incident_purchased=int(out[OUT_FIRST_INC_PURCHASED]),
        rank_overflow=int(out[OUT_RANK_OVERFLOW]),
        rank_pair_counts=cells,
    )
    if config.checkpoints and int(out[OUT_TRACE_ROWS]) != len(config.checkpoints):
        raise RuntimeError("run ended before reaching every checkpoint")
    if config.checkpoints:
        result = (result, trace)
    return result


def _run_trial_reference(config: RunConfig, trial_seed: int, trial_index: int):
    n = config.n
    strat = config.strategy
    k = strat.k
    pe = config.effective_phase_end()
    stream = new_stream(n, trial_seed, config.stream_mode)
    state = ProcessState(n, k_max=k, rank_cap=config.rank_cap, debug=config.debug)
    sstate = StrategyState(strat, state)
    is_both_ends = strat.kind is StrategyKind.BOTH_ENDS
    is_deg_k_phase = strat.kind is StrategyKind.ALGO_DEG_K

    checkpoints = list(config.checkpoints)
    trace = np.zeros((len(checkpoints), TR_COLS), dtype=np.int64)
    trace_idx = 0

    step = 0
    hit_step = -1
    connect_step = -1
    min_at_hit = -1
    max_skipped = 0
    first_inc_total = 0
    first_inc_purchased = 0
    snapshot = None

    while True:
        cont = False
        if config.fixed_steps > 0:
            cont = step < config.fixed_steps
        else:
            if hit_step < 0:
                cont = True
            if config.track_connectivity and connect_step < 0:
                cont = True
        if step < pe:
            cont = True
        if not cont:
            break

        try:
            edge = stream.next_edge()
        except StreamExhausted as exc:
            raise RuntimeError("edge list exhausted before the run completed") from exc
        u, v = edge
        pre_view = (
            int(state.exposed_deg[u]),
            int(state.exposed_deg[v]),
            int(state.builder_deg[u]),
            int(state.builder_deg[v]),
        )
        step += 1
        allowed = hit_step < 0 or (is_both_ends and pe > 0 and step <= pe)
        if allowed:
            buy, tag = decide_with_tag(strat, sstate, step, edge, pre_view)
        else:
            buy, tag = False, None
        record = state.expose(edge, purchase=buy)
        update_sets(sstate, edge, buy, tag)

        if record.first_incident:
            first_inc_total += 1
            if buy:
                first_inc_purchased += 1
        if connect_step < 0 and record.component_count == 1:
            connect_step = step
        if hit_step < 0 and int(state.low_exposed_count[k]) == 0:
            hit_step = step
            min_at_hit = int(state.builder_deg.min())
        if config.debug and is_deg_k_phase and step <= pe:
            builder_iso_mask = state.builder_deg == 0
            exposed_iso_mask = state.exposed_deg == 0
            if not np.array_equal(builder_iso_mask, exposed_iso_mask):
                raise AssertionError(
                    "phase-1 purchase rule let an exposed vertex stay builder-isolated"
                )
        if pe > 0 and step <= pe:
            skipped = len(sstate.skipped)
            if skipped > max_skipped:
                max_skipped = skipped
            if step == pe:
                snapshot = (
                    len(sstate.touched),
                    skipped,
                    len(sstate.unseen),
                    len(sstate.underfull),
                    sstate.purchase_count,
                )
        if trace_idx < len(checkpoints) and step == checkpoints[trace_idx]:
            trace[trace_idx, TR_STEP] = step
            trace[trace_idx, TR_TOUCHED] = len(sstate.touched)
            trace[trace_idx, TR_SKIPPED] = len(sstate.skipped)
            trace[trace_idx, TR_UNSEEN] = len(sstate.unseen)
            trace[trace_idx, TR_PURCHASES] = sstate.purchase_count
            trace[trace_idx, TR_FIRST_INC] = first_inc_total
            trace[trace_idx, TR_FIRST_INC_PURCHASED] = first_inc_purchased
            trace[trace_idx, TR_UNDERFULL] = len(sstate.underfull)
            trace_idx += 1

    if snapshot is None:
        snapshot = (-1, -1, -1, -1, -1)
    result = TrialResult(
        trial_index=trial_index,
        seed=trial_seed,
        n=n,
        k=k,
        hitting_step=hit_step,
        connect_step=connect_step,
        purchases=sstate.purchase_count,
        min_builder_deg_at_hit=min_at_hit,
        success=hit_step >= 0 and min_at_hit >= k,
        efficient_count=sstate.efficient_count,
        inefficient_count=sstate.inefficient_count,
        touched_at_phase_end=snapshot[0],
        skipped_at_phase_end=snapshot[1],
        unseen_at_phase_end=snapshot[2],
        underfull_at_phase_end=snapshot[3],
        max_skipped=max_skipped,
        purchases_at_phase_end=snapshot[4],
        phase_end=pe,
        steps=step,
        repetition_draws=stream.repetition_draws if stream.repetition_draws is not None else -1,
        self_draws=stream.self_draws if stream.self_draws is not None else -1,
        min_builder_deg_final=int(state.builder_deg.min()),
        underfull_final=len(sstate.underfull),
        first_incident_edges=first_inc_total,
        first_incident_purchased=first_inc_purchased,
        rank_overflow=state.rank_pairs.overflow_count,
        rank_pair_counts=dict(sorted(state.rank_pairs.counts.items())),
    )
    if config.checkpoints:
        return (result, trace)
    return result


def run_trial(config: RunConfig, trial_seed: int, trial_index: int = 0):
    """Run one trial to completion; deterministic in (config, trial_seed)."""
    if not isinstance(config, RunConfig):
        raise ValueError("config must be a RunConfig")
    if config.reference:
        return _run_trial_reference(config, trial_seed, trial_index)
    return _run_trial_fast(config, trial_seed, trial_index)


def _run_slice(args) -> list[TrialResult]:
    config, master_seed, lo, hi = args
    return [run_trial(config, derive_trial_seed(master_seed, i), i) for i in range(lo, hi)]


def run_trials(
    config: RunConfig,
    master_seed: int,
    trials: int,
    parallelism: int = 1,
) -> Aggregate:
    """Run `trials` independent trials and aggregate.

    The result is an exact function of (config, master_seed, trials): worker
    count and scheduling order cannot affect it, because every trial's seed
    comes from its index alone and aggregation folds results in index order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if config.checkpoints:
        raise ValueError("checkpoints are a single-trial diagnostic; use trace_experiment")
    if parallelism == 1 or trials == 1:
        results = _run_slice((config, master_seed, 0, trials))
    else:
        workers = min(parallelism, trials)
        bounds = [
            (
                config,
                master_seed,
                w * trials // workers,
                (w + 1) * trials // workers,
            )
            for w in range(workers)
        ]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_slice, bounds):
                results.extend(chunk)
    return _aggregate(results, config.n)


# --------------------------------------------------------------------------
# exact enumeration oracle
# --------------------------------------------------------------------------

_ORACLE_STATISTICS = ("tau1", "taucon", "e_o1", "phi", "strategy")


def enumerate_exact(
    n: int,
    statistic: str,
    strategy: StrategyConfig | None = None,
    rank_cell: tuple[int, int] | None = None,
) -> dict:
    """Exact distribution of a process statistic over all edge orderings.

    Walks every permutation of the n(n-1)/2 edges of the complete graph with
    a deliberately plain re-implementation (dict degrees, list union-find)
    that shares no simulation code with the rest of the package, and tallies
    the statistic:

        tau1:     first step with minimum exposed degree 1
        taucon:   first step with a connected exposed graph
        e_o1:     edges that were some endpoint's first, over the full order
        phi:      final count in rank-pair cell `rank_cell`
        strategy: (hitting step, purchases, success) for `strategy`

    Returns {value: Fraction probability}, summing to 1. n is capped at 5
    (10 edges, 3.6M orderings) and n=5 takes on the order of a minute.
    """
    if not isinstance(n, int) or not 2 <= n <= 5:
        raise ValueError("exact enumeration requires 2 <= n <= 5")
    if statistic not in _ORACLE_STATISTICS:
        raise ValueError(f"statistic must be one of {_ORACLE_STATISTICS}")
    if statistic == "phi":
        if rank_cell is None or rank_cell[0] < rank_cell[1] or rank_cell[1] < 1:
            raise ValueError("phi statistic requires a canonical rank cell (r >= s >= 1)")
    if statistic == "strategy":
        if strategy is None:
            raise ValueError("strategy statistic requires a StrategyConfig")
        if strategy.k >= n:
            raise ValueError("strategy degree target must be smaller than n")

    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    total_edges = len(edges)
    phase_end = strategy.phase_end(n) if strategy is not None else 0
    counter: dict = {}

    for perm in itertools.permutations(range(total_edges)):
        exposed = [0] * n
        builder = [0] * n
        parent = list(range(n))
        components = n
        uncovered = n
        tau1 = -1
        taucon = -1
        first_inc = 0
        cell_count = 0
        purchases = 0
        hit = -1
        low = n if strategy is None else n  # vertices below the target degree
        k = strategy.k if strategy is not None else 1
        kind = strategy.kind if strategy is not None else None

        for step, edge_index in enumerate(perm, start=1):
            u, v = edges[edge_index]
            pre_eu, pre_ev = exposed[u], exposed[v]
            pre_bu, pre_bv = builder[u], builder[v]

            buy = False
            if kind is not None and hit < 0:
                if kind is StrategyKind.BUY_ALL:
                    buy = True
                elif kind is StrategyKind.BUY_NONE:
                    buy = False
                elif kind is StrategyKind.GREEDY_KNN:
                    buy = pre_bu < k or pre_bv < k
                elif kind is StrategyKind.BOTH_ENDS:
                    buy = pre_bu < k and pre_bv < k
                elif kind is StrategyKind.ALGO_DEG_K:
                    if step <= phase_end:
                        buy = (pre_bu < k and pre_bv < k) or pre_eu == 0 or pre_ev == 0
                    else:
                        buy = pre_bu < k or pre_bv < k
                elif kind is StrategyKind.ALGO_DEG_1:
                    if step <= phase_end:
                        buy = pre_bu == 0 and pre_bv == 0
                    else:
                        buy = pre_bu == 0 or pre_bv == 0

            exposed[u] += 1
            exposed[v] += 1
            if pre_eu == 0:
                uncovered -= 1
                first_inc += 1
            if pre_ev == 0:
                uncovered -= 1
                if pre_eu != 0:
                    first_inc += 1
            if pre_eu + 1 == k:
                low -= 1
            if pre_ev + 1 == k:
                low -= 1
            if buy:
                builder[u] += 1
                builder[v] += 1
                purchases += 1

            if statistic == "phi":
                hi_rank = max(pre_eu + 1, pre_ev + 1)
                lo_rank = min(pre_eu + 1, pre_ev + 1)
                if (hi_rank, lo_rank) == rank_cell:
                    cell_count += 1

            ru = u
            while parent[ru] != ru:
                ru = parent[ru]
            rv = v
            while parent[rv] != rv:
                rv = parent[rv]
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
                components -= 1
            if taucon < 0 and components == 1:
                taucon = step
            if tau1 < 0 and uncovered == 0:
                tau1 = step
            if hit < 0 and low == 0:
                hit = step
                if statistic == "strategy":
                    break

        if statistic == "tau1":
            key = tau1
        elif statistic == "taucon":
            key = taucon
        elif statistic == "e_o1":
            key = first_inc
        elif statistic == "phi":
            key = cell_count
        else:
            key = (hit, purchases, min(builder) >= k)
        counter[key] = counter.get(key, 0) + 1

    denom = math.factorial(total_edges)
    return {key: Fraction(count, denom) for key, count in sorted(counter.items())}


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------


def phi_experiment(n: int, min_degree: int, cap: int | None = None, seed: int = 0) -> dict:
    """Run the raw process until minimum exposed degree `min_degree` and
    report rank-pair densities.

    Only cells (r, s) with r + s <= min_degree are reported: once every
    vertex has exposed degree >= min_degree, no future exposure can land in
    those cells, so their whole-process counts are already final.
    """
    if min_degree < 2:
        raise ValueError("min_degree must be >= 2")
    if min_degree >= n:
        raise ValueError("min_degree must be smaller than n")
    max_cap = int(10 * math.log(n))
    if cap is None:
        cap = max(min_degree, min(64, max_cap))
    if cap > max_cap:
        raise ValueError(f"cap must be at most 10 ln n = {max_cap}")
    if cap < min_degree - 1:
        raise ValueError("cap too small to cover the reported cells")
    config = RunConfig(
        n=n,
        strategy=StrategyConfig(kind=StrategyKind.BUY_NONE, k=min_degree),
        rank_cap=cap,
    )
    result = run_trial(config, derive_trial_seed(seed, 0), 0)
    densities = {}
    counts = {}
    for (r, s), count in sorted(result.rank_pair_counts.items()):
        if r + s <= min_degree:
            counts[(r, s)] = count
            densities[(r, s)] = count / n
    return {
        "n": n,
        "min_degree": min_degree,
        "cap": cap,
        "seed": seed,
        "hitting_step": result.hitting_step,
        "counts": counts,
        "densities": densities,
    }


def degree_experiment(n: int, edge_count: int, seed: int = 0) -> dict:
    """Expose exactly `edge_count` uniform edges and histogram the degrees."""
    if edge_count < 1 or edge_count > n * (n - 1) // 2:
        raise ValueError("edge_count must lie in [1, n(n-1)/2]")
    config = RunConfig(
        n=n,
        strategy=StrategyConfig(kind=StrategyKind.BUY_NONE, k=1),
        fixed_steps=edge_count,
    )
    n_, strat = config.n, config.strategy
    # reuse the fast path but keep the exposed array
    trial_seed = derive_trial_seed(seed, 0)
    steps_needed = edge_count
    draw_count = 2 * math.ceil(1.06 * steps_needed) + _DRAW_SLACK
    kernel = active(kernels.trial_kernel)
    attempts = 0
    while True:
        attempts += 1
        if attempts > 40:
            raise RuntimeError("trial did not finish within the draw budget")
        exposed = np.zeros(n, dtype=np.int64)
        builder = np.zeros(n, dtype=np.int64)
        parent = np.arange(n, dtype=np.int64)
        out = np.full(OUT_SIZE, -1, dtype=np.int64)
        out[OUT_STATUS] = 0
        rank_counts = np.zeros(1, dtype=np.int64)
        trace = np.zeros((0, TR_COLS), dtype=np.int64)
        rng = np.random.default_rng(trial_seed)
        draws = rng.integers(0, n, size=draw_count, dtype=np.int64)
        table = np.full(
            next_prime(min(draw_count, n * (n - 1)) + 17), -1, dtype=np.int64
        )
        kernel(
            n, KIND_CODES[strat.kind], strat.k, 0, 0, draws, _EMPTY_I64, _EMPTY_I64,
            edge_count, 0, 0, 0,
            np.empty(0, dtype=np.int64), parent, table, exposed, builder,
            rank_counts, trace, out,
        )
        if out[OUT_STATUS] == 0:
            break
        draw_count *= 2
    hist = np.bincount(exposed)
    return {
        "n": n,
        "edge_count": edge_count,
        "seed": seed,
        "degree_counts": {int(d): int(c) for d, c in enumerate(hist) if c},
        "degree_fractions": {int(d): int(c) / n for d, c in enumerate(hist) if c},
    }


def success_prob_experiment(
    n: int,
    C: float,
    trials: int,
    master_seed: int = 0,
    parallelism: int = 1,
) -> dict:
    """Isolation-avoidance runs: success rate vs the class-ratio estimate.

    Runs the phased isolation strategy to the degree-1 hitting time and
    compares the empirical success rate against the mean of
    unseen / (skipped + unseen) taken at the phase horizon. Trials where
    the skipped class is empty must succeed and are asserted to.
    """
    config = RunConfig(
        n=n,
        strategy=StrategyConfig(kind=StrategyKind.ALGO_DEG_1, k=1, C=C),
    )
    agg = run_trials(config, master_seed, trials, parallelism)
    ratios = []
    for r in agg.results:
        den = r.skipped_at_phase_end + r.unseen_at_phase_end
        ratio = r.unseen_at_phase_end / den if den else 1.0
        if r.skipped_at_phase_end == 0 and not r.success:
            raise AssertionError(
                f"trial {r.trial_index}: empty skipped class must force success"
            )
        ratios.append(ratio)
    mean_ratio = sum(ratios) / len(ratios)
    return {
        "n": n,
        "C": C,
        "trials": trials,
        "master_seed": master_seed,
        "success_rate": agg.success_rate,
        "mean_ratio": mean_ratio,
        "gap": abs(agg.success_rate - mean_ratio),
        "ratios": ratios,
        "aggregate": agg,
    }


def last_covered_experiment(
    n: int,
    C: float,
    trials: int,
    master_seed: int = 0,
) -> dict:
    """Which builder-isolated vertex is covered last, over re-drawn futures.

    Runs the isolation strategy's first phase once (seed index 0), freezes
    the builder-isolated membership, then replays `trials` independent
    with-repetition continuations (seed indices 1..trials) and records which
    member receives an incident drawn pair last. Draws that repeat an
    exposed edge still count as coverage, matching the raw drawing process.
    Continuations whose final draw covers two members at once are discarded
    as ties. Exchangeability says the winner is uniform over the members.
    """
    strategy = StrategyConfig(kind=StrategyKind.ALGO_DEG_1, k=1, C=C)
    pe = strategy.phase_end(n)
    config = RunConfig(n=n, strategy=strategy, fixed_steps=pe)
    phase_seed = derive_trial_seed(master_seed, 0)

    # replay the phase with the reference path to get the builder array
    state = ProcessState(n, k_max=1, rank_cap=0)
    sstate = StrategyState(strategy, state)
    stream = new_stream(n, phase_seed, StreamMode.REJECTION_COUPLED)
    for step in range(1, pe + 1):
        edge = stream.next_edge()
        u, v = edge
        pre_view = (
            int(state.exposed_deg[u]),
            int(state.exposed_deg[v]),
            int(state.builder_deg[u]),
            int(state.builder_deg[v]),
        )
        buy, tag = decide_with_tag(strategy, sstate, step, edge, pre_view)
        state.expose(edge, purchase=buy)
        update_sets(sstate, edge, buy, tag)

    member = (state.builder_deg == 0).astype(np.int64)
    members = [int(i) for i in np.nonzero(member)[0]]
    member_count = len(members)
    if member_count < 2:
        raise ValueError("phase left fewer than two builder-isolated vertices")

    kernel = active(kernels.last_covered_kernel)
    covered = np.zeros(n, dtype=np.int64)
    out = np.zeros(4, dtype=np.int64)
    pair_budget = int(0.5 * n * (math.log(member_count) + 12)) + 64
    counts = {m: 0 for m in members}
    ties = 0
    for t in range(1, trials + 1):
        seed = derive_trial_seed(master_seed, t)
        budget = pair_budget
        while True:
            rng = np.random.default_rng(seed)
            draws = rng.integers(0, n, size=2 * budget, dtype=np.int64)
            kernel(n, draws, member, covered, out)
            if out[0] == 0:
                break
            budget *= 2
        last = int(out[1])
        if last < 0:
            ties += 1
        else:
            counts[last] += 1
    return {
        "n": n,
        "C": C,
        "trials": trials,
        "master_seed": master_seed,
        "members": members,
        "member_count": member_count,
        "counts": [counts[m] for m in members],
        "ties": ties,
    }


@dataclass(frozen=True)
class TraceResult:
    """Vertex-class trajectory of one trial at chosen checkpoints.

    first_incident_edges counts exposed edges that were some endpoint's
    first (non-decreasing in the step); first_incident_purchased counts the
    purchased ones and can never exceed purchases.
    """

    n: int
    phase_end: int
    checkpoints: tuple
    touched: tuple
    skipped: tuple
    unseen: tuple
    underfull: tuple
    purchases: tuple
    first_incident_edges: tuple
    first_incident_purchased: tuple
    result: TrialResult

    def __post_init__(self):
        fi = self.first_incident_edges
        if any(b < a for a, b in zip(fi, fi[1:])):
            raise AssertionError("first-incident count decreased along the trace")
        if any(e > p for e, p in zip(self.first_incident_purchased, self.purchases)):
            raise AssertionError("purchased first-incident edges exceed purchases")


def trace_experiment(
    n: int,
    C: float,
    strategy: StrategyConfig,
    checkpoints: tuple[int, ...] | None = None,
    seed: int = 0,
    reference: bool = False,
) -> TraceResult:
    """Record the vertex-class sizes of one trial at chosen steps.

    C fixes the observation horizon ceil(C*n); a phased strategy must carry
    the same C. Default checkpoints are the powers of two up to the horizon
    plus the horizon itself.
    """
    horizon = phase_horizon(C, n)
    if horizon < 1:
        raise ValueError("C must make the horizon at least one step")
    strategy_pe = strategy.phase_end(n)
    if strategy_pe and strategy_pe != horizon:
        raise ValueError(
            f"strategy phase horizon {strategy_pe} conflicts with C horizon {horizon}"
        )
    if checkpoints is None:
        cps = []
        power = 1
        while power < horizon:
            cps.append(power)
            power *= 2
        cps.append(horizon)
        checkpoints = tuple(cps)
    config = RunConfig(
        n=n,
        strategy=strategy,
        checkpoints=tuple(checkpoints),
        horizon=0 if strategy_pe else horizon,
        reference=reference,
    )
    result, trace = run_trial(config, derive_trial_seed(seed, 0), 0)
    return TraceResult(
        n=n,
        phase_end=horizon,
        checkpoints=tuple(int(x) for x in trace[:, TR_STEP]),
        touched=tuple(int(x) for x in trace[:, TR_TOUCHED]),
        skipped=tuple(int(x) for x in trace[:, TR_SKIPPED]),
        unseen=tuple(int(x) for x in trace[:, TR_UNSEEN]),
        underfull=tuple(int(x) for x in trace[:, TR_UNDERFULL]),
        purchases=tuple(int(x) for x in trace[:, TR_PURCHASES]),
        first_incident_edges=tuple(int(x) for x in trace[:, TR_FIRST_INC]),
        first_incident_purchased=tuple(int(x) for x in trace[:, TR_FIRST_INC_PURCHASED]),
        result=result,
    )


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def write_ndjson(results, path) -> None:
    """One JSON object per trial, keys in declaration order, no timestamps."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json_dict(), separators=(",", ":")) + "\n")


def load_ndjson(path) -> list[TrialResult]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TrialResult.from_json_dict(json.loads(line)))
    return out


def write_csv(results, path) -> None:
    """Scalar trial fields in the fixed CSV_COLUMNS order."""
    import csv as csv_mod

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in results:
            writer.writerow([getattr(r, name) for name in CSV_COLUMNS])


def load_csv(path) -> list[dict]:
    import csv as csv_mod

    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv_mod.DictReader(fh))
