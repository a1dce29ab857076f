"""The exposed-edge process: lazy uniform edge orderings and exact state.

This module is the reference implementation. It favours clarity over speed;
the accelerated twin of the trial loop lives in `kernels`, and the test
suite asserts the two produce identical trajectories seed by seed.

Vertices are 0-based contiguous integers; an edge is a pair (u, v) with
u < v. All randomness flows through numpy's PCG64 generator seeded with an
explicit 64-bit value, so a (n, seed, mode) triple pins the edge sequence
bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

Edge = tuple[int, int]

FULL_PERMUTATION_LIMIT = 2000

# Chunk length for the rejection sampler's raw value buffer. Must be even so
# vertex pairs never straddle a refill; generating the values in chunks of
# any even size yields the same stream as one large request.
_DRAW_CHUNK = 8192


class StreamExhausted(Exception):
    """All edges of the complete graph have been emitted."""


def full_permutation_arrays(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays of all edges of K_n in uniform random order.

    Single source of truth for full-permutation orderings: the lazy stream
    and the compiled kernel wrapper both call this, so the two paths walk
    the same sequence for a given seed.
    """
    rng = np.random.default_rng(seed)
    us, vs = np.triu_indices(n, k=1)
    order = rng.permutation(n * (n - 1) // 2)
    return us[order].astype(np.int64), vs[order].astype(np.int64)


class StreamMode(str, Enum):
    """How the uniform edge ordering is realized.

    FULL_PERMUTATION shuffles all N = n(n-1)/2 edges up front and is
    restricted to small n; it exists to cross-validate the sampler below.
    REJECTION_COUPLED draws vertex pairs uniformly with repetition and skips
    self-pairs and already-emitted edges, which yields the same distribution
    over orderings while storing only the edges actually emitted.
    """

    FULL_PERMUTATION = "full-permutation"
    REJECTION_COUPLED = "rejection-coupled"


class EdgeStream:
    """Lazily emitted uniform random ordering of the edges of K_n.

    Attributes:
        n: vertex count.
        mode: StreamMode.
        rng_seed: the 64-bit seed this stream was built from.
        emitted: number of distinct edges emitted so far.
        total_edges: n(n-1)/2.
        exposed_set: emitted-edge membership keys (rejection mode only).
        repetition_draws: raw pair draws excluding self-pairs, including
            repeats (rejection mode only).
        self_draws: raw draws discarded because both endpoints coincided
            (rejection mode only).
    """

    def __init__(self, n: int, seed: int, mode: StreamMode | str = StreamMode.REJECTION_COUPLED):
        if not isinstance(n, int) or n < 2:
            raise ValueError("n must be an integer >= 2")
        if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        mode = StreamMode(mode)
        self.n = n
        self.mode = mode
        self.rng_seed = seed
        self.emitted = 0
        self.total_edges = n * (n - 1) // 2
        self._rng = np.random.default_rng(seed)
        if mode is StreamMode.FULL_PERMUTATION:
            if n > FULL_PERMUTATION_LIMIT:
                raise ValueError(
                    f"full-permutation mode is limited to n <= {FULL_PERMUTATION_LIMIT}"
                )
            self._eu, self._ev = full_permutation_arrays(n, seed)
            self.exposed_set = None
            self.repetition_draws = None
            self.self_draws = None
        else:
            self._eu = None
            self._ev = None
            self.exposed_set: set[int] = set()
            self.repetition_draws = 0
            self.self_draws = 0
            self._buf = np.empty(0, dtype=np.int64)
            self._pos = 0

    def next_edge(self) -> Edge:
        """Emit the next not-yet-seen edge; raises StreamExhausted at the end."""
        if self.emitted >= self.total_edges:
            raise StreamExhausted(f"all {self.total_edges} edges emitted")
        if self.mode is StreamMode.FULL_PERMUTATION:
            u = int(self._eu[self.emitted])
            v = int(self._ev[self.emitted])
            self.emitted += 1
            return (u, v)
        return self._next_rejection()

    def _next_rejection(self) -> Edge:
        n = self.n
        while True:
            if self._pos + 1 >= len(self._buf):
                self._buf = self._rng.integers(0, n, size=_DRAW_CHUNK, dtype=np.int64)
                self._pos = 0
            u = int(self._buf[self._pos])
            v = int(self._buf[self._pos + 1])
            self._pos += 2
            if u == v:
                self.self_draws += 1
                continue
            self.repetition_draws += 1
            if u > v:
                u, v = v, u
            key = u * n + v
            if key in self.exposed_set:
                continue
            self.exposed_set.add(key)
            self.emitted += 1
            return (u, v)

    def __iter__(self):
        return self

    def __next__(self) -> Edge:
        try:
            return self.next_edge()
        except StreamExhausted:
            raise StopIteration


def new_stream(n: int, seed: int, mode: StreamMode | str = StreamMode.REJECTION_COUPLED) -> EdgeStream:
    """Create an EdgeStream positioned before the first edge."""
    return EdgeStream(n, seed, mode)


def next_edge(stream: EdgeStream) -> Edge:
    return stream.next_edge()


@dataclass
class RankPairTable:
    """Counts of edges by incidence rank pair (r, s), r >= s >= 1.

    An exposed edge raises its endpoints to post-exposure degrees r and s
    (canonically r >= s) and increments exactly one cell; cells with r above
    `cap` are pooled into `overflow_count`, so the grand total always equals
    the number of exposed edges.
    """

    cap: int = 64
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    overflow_count: int = 0

    def record(self, r: int, s: int) -> None:
        if r > self.cap:
            self.overflow_count += 1
        else:
            cell = (r, s)
            self.counts[cell] = self.counts.get(cell, 0) + 1

    def total(self) -> int:
        return sum(self.counts.values()) + self.overflow_count

    def densities(self, n: int) -> dict[tuple[int, int], float]:
        return {cell: c / n for cell, c in sorted(self.counts.items())}


@dataclass(frozen=True)
class StepRecord:
    """What one exposure did: rank pair, connectivity, pre-purchase view."""

    step: int
    edge: Edge
    rank_high: int
    rank_low: int
    component_count: int
    pre_builder_degs: tuple[int, int]
    purchased: bool
    first_incident: bool


class ProcessState:
    """Exact state of the exposed graph and the builder's subgraph.

    Tracks per-vertex exposed/builder degrees, purchased edges, counts of
    vertices below each exposed-degree threshold up to `k_max`, incremental
    connectivity over exposed edges, and the rank-pair table.

    `debug=True` recounts every derived quantity from scratch after each
    exposure and checks the core containment (builder degree never exceeds
    exposed degree), turning silent bookkeeping bugs into hard failures.
    """

    def __init__(self, n: int, k_max: int = 1, rank_cap: int = 64, debug: bool = False):
        if not isinstance(n, int) or n < 2:
            raise ValueError("n must be an integer >= 2")
        if not isinstance(k_max, int) or k_max < 1:
            raise ValueError("k_max must be an integer >= 1")
        self.n = n
        self.k_max = k_max
        self.debug = debug
        self.step = 0
        self.exposed_deg = np.zeros(n, dtype=np.int64)
        self.builder_deg = np.zeros(n, dtype=np.int64)
        self.builder_edges: list[Edge] = []
        # low_exposed_count[j] = #vertices with exposed degree < j, 1 <= j <= k_max
        self.low_exposed_count = np.full(k_max + 1, n, dtype=np.int64)
        self.low_exposed_count[0] = 0
        self.rank_pairs = RankPairTable(cap=rank_cap)
        self.component_count = n
        self._parent = np.arange(n, dtype=np.int64)
        self._exposed_keys: set[int] = set()

    def _find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = int(parent[x])
        return x

    def expose(self, edge: Edge, purchase: bool = False) -> StepRecord:
        """Reveal `edge`, optionally buying it, and return the step record.

        Raises ValueError on a duplicate edge: exposing the same edge twice
        is a caller bug, not a recoverable condition.
        """
        u, v = edge
        n = self.n
        if not (0 <= u < v < n):
            raise ValueError(f"edge {edge!r} is not canonical for n={n}")
        key = u * n + v
        if key in self._exposed_keys:
            raise ValueError(f"edge {edge!r} was already exposed")
        self._exposed_keys.add(key)

        pre_bu = int(self.builder_deg[u])
        pre_bv = int(self.builder_deg[v])
        pre_eu = int(self.exposed_deg[u])
        pre_ev = int(self.exposed_deg[v])
        first_incident = pre_eu == 0 or pre_ev == 0

        self.step += 1
        self.exposed_deg[u] = pre_eu + 1
        self.exposed_deg[v] = pre_ev + 1
        if pre_eu + 1 <= self.k_max:
            self.low_exposed_count[pre_eu + 1] -= 1
        if pre_ev + 1 <= self.k_max:
            self.low_exposed_count[pre_ev + 1] -= 1

        r, s = max(pre_eu + 1, pre_ev + 1), min(pre_eu + 1, pre_ev + 1)
        self.rank_pairs.record(r, s)

        ru, rv = self._find(u), self._find(v)
        if ru != rv:
            if ru < rv:
                self._parent[rv] = ru
            else:
                self._parent[ru] = rv
            self.component_count -= 1

        if purchase:
            self.builder_deg[u] = pre_bu + 1
            self.builder_deg[v] = pre_bv + 1
            self.builder_edges.append((u, v))

        if self.debug:
            self._check_invariants()

        return StepRecord(
            step=self.step,
            edge=(u, v),
            rank_high=r,
            rank_low=s,
            component_count=self.component_count,
            pre_builder_degs=(pre_bu, pre_bv),
            purchased=purchase,
            first_incident=first_incident,
        )

    def min_exposed_degree(self) -> int:
        return int(self.exposed_deg.min())

    def _check_invariants(self) -> None:
        if (self.builder_deg > self.exposed_deg).any():
            raise AssertionError("builder degree exceeds exposed degree")
        if int(self.exposed_deg.sum()) != 2 * self.step:
            raise AssertionError("exposed degree sum out of sync with step count")
        if int(self.builder_deg.sum()) != 2 * len(self.builder_edges):
            raise AssertionError("builder degree sum out of sync with purchases")
        for j in range(1, self.k_max + 1):
            recount = int(np.count_nonzero(self.exposed_deg < j))
            if recount != int(self.low_exposed_count[j]):
                raise AssertionError(f"low-degree count desync at threshold {j}")


def hitting_reached(state: ProcessState, k: int) -> bool:
    """True iff every vertex has exposed degree >= k."""
    if not isinstance(k, int) or k < 1:
        raise ValueError("k must be an integer >= 1")
    if k >= state.n:
        raise ValueError("k must be smaller than the vertex count")
    if k <= state.k_max:
        return int(state.low_exposed_count[k]) == 0
    return int(np.count_nonzero(state.exposed_deg < k)) == 0


def connectivity_hitting(state: ProcessState) -> bool:
    """True iff the exposed graph is connected (isolated vertices count)."""
    return state.component_count == 1


def phase_horizon(coefficient: float | None, n: int) -> int:
    """First-phase length in steps: ceil(coefficient * n), exactly.

    The multiply is done in exact rational arithmetic on the decimal literal
    of the coefficient, so e.g. 0.3 * 100000 gives 30000, not 30001 via a
    floating-point ceiling.
    """
    if coefficient is None:
        return 0
    if coefficient <= 0:
        raise ValueError("phase coefficient must be positive")
    from fractions import Fraction

    frac = Fraction(str(float(coefficient))) * n
    return int(-(-frac.numerator // frac.denominator))
