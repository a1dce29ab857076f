"""Purchase strategies and their vertex-set bookkeeping.

Every strategy sees each revealed edge once, with only pre-exposure degree
information, and decides irrevocably whether to buy it. The bookkeeping
classes track the standard vertex classes:

    touched:   builder degree >= 1
    skipped:   builder-isolated but exposed-covered
    unseen:    exposed-isolated
    underfull: builder degree <= k - 1

touched/skipped/unseen always partition the vertex set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .process import Edge, ProcessState, phase_horizon


class StrategyKind(str, Enum):
    GREEDY_KNN = "greedy_knn"
    BOTH_ENDS = "both_ends"
    ALGO_DEG_K = "algo_deg_k"
    ALGO_DEG_1 = "algo_deg_1"
    BUY_ALL = "buy_all"
    BUY_NONE = "buy_none"


# integer codes shared with the accelerated kernel
KIND_CODES = {
    StrategyKind.GREEDY_KNN: 0,
    StrategyKind.BOTH_ENDS: 1,
    StrategyKind.ALGO_DEG_K: 2,
    StrategyKind.ALGO_DEG_1: 3,
    StrategyKind.BUY_ALL: 4,
    StrategyKind.BUY_NONE: 5,
}

# kinds that carry a first-phase horizon coefficient C
PHASED_KINDS = (StrategyKind.BOTH_ENDS, StrategyKind.ALGO_DEG_K, StrategyKind.ALGO_DEG_1)
_PHASED_KINDS = PHASED_KINDS

EFFICIENT = "efficient"
INEFFICIENT = "inefficient"


@dataclass(frozen=True)
class StrategyConfig:
    """Strategy kind plus its numeric parameters.

    k is the degree target. For the phased strategies, C scales the length
    of the first phase (first ceil(C * n) steps). epsilon is an equivalent
    parametrization: C = k / epsilon^2 for both_ends and algo_deg_k, and
    C = 1 / epsilon^2 for algo_deg_1 (which requires epsilon < 3/4, i.e.
    C > 16/9). delta is a budget slack used only in reported thresholds.
    Either C or epsilon may be given; if both are, they must agree.
    """

    kind: StrategyKind
    k: int = 1
    C: float | None = None
    delta: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        kind = StrategyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError("k must be an integer >= 1")

        if kind not in _PHASED_KINDS:
            for name in ("C", "delta", "epsilon"):
                if getattr(self, name) is not None:
                    raise ValueError(f"strategy {kind.value} takes no parameter {name}")
            return

        if kind is StrategyKind.ALGO_DEG_1 and self.k != 1:
            raise ValueError("algo_deg_1 requires k = 1")

        scale = self.k if kind in (StrategyKind.BOTH_ENDS, StrategyKind.ALGO_DEG_K) else 1
        C = self.C
        if C is None and self.epsilon is not None:
            if not 0 < self.epsilon < 1:
                raise ValueError("epsilon must lie in (0, 1)")
            C = scale / self.epsilon**2
            object.__setattr__(self, "C", C)
        if C is None:
            raise ValueError(f"strategy {kind.value} requires C (or epsilon)")
        if not C > 0:
            raise ValueError("C must be positive")
        if self.epsilon is not None and self.C is not None:
            implied = scale / self.epsilon**2
            if abs(implied - C) > 1e-9 * max(1.0, abs(C)):
                raise ValueError(
                    f"epsilon={self.epsilon} implies C={implied}, got C={C}"
                )
        if kind is StrategyKind.ALGO_DEG_1:
            eps = C ** -0.5
            if not eps < 0.75:
                raise ValueError("algo_deg_1 requires C > 16/9 (epsilon < 3/4)")
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", eps)
        elif self.epsilon is None:
            object.__setattr__(self, "epsilon", math.sqrt(scale / C))
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be non-negative")

    def phase_end(self, n: int) -> int:
        """First-phase horizon in steps for an n-vertex run (0 if unphased)."""
        if self.kind in _PHASED_KINDS:
            return phase_horizon(self.C, n)
        return 0

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "k": self.k}
        for name in ("C", "delta", "epsilon"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StrategyConfig":
        allowed = {"kind", "k", "C", "delta", "epsilon"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown strategy config keys: {sorted(unknown)}")
        if "kind" not in data:
            raise ValueError("strategy config requires a kind")
        return cls(**data)


class StrategyState:
    """Vertex-class sets and purchase counters for one trial.

    Shares the degree arrays of the underlying ProcessState; `update_sets`
    must be called once per exposed edge, after the exposure (and purchase,
    if any) has been applied.
    """

    def __init__(self, config: StrategyConfig, process_state: ProcessState):
        self.config = config
        self.n = process_state.n
        self.builder_deg = process_state.builder_deg
        self.exposed_deg = process_state.exposed_deg
        self.phase_end = config.phase_end(self.n)
        self.touched: set[int] = set()
        self.skipped: set[int] = set()
        self.unseen: set[int] = set(range(self.n))
        self.underfull: set[int] = set(range(self.n))
        self.purchase_count = 0
        self.efficient_count = 0
        self.inefficient_count = 0

    def covered_count(self) -> int:
        return self.n - len(self.unseen)


def decide_with_tag(
    config: StrategyConfig,
    state: StrategyState | None,
    step: int,
    edge: Edge,
    pre_view: tuple[int, int, int, int],
) -> tuple[bool, str | None]:
    """Purchase decision plus the efficiency tag where one applies.

    pre_view is (exposed_u, exposed_v, builder_u, builder_v), all taken
    before the edge is exposed. Pure function of its arguments.
    """
    exp_u, exp_v, bld_u, bld_v = pre_view
    kind = config.kind
    k = config.k
    if kind is StrategyKind.BUY_ALL:
        return True, None
    if kind is StrategyKind.BUY_NONE:
        return False, None
    if kind is StrategyKind.GREEDY_KNN:
        return bld_u < k or bld_v < k, None
    if kind is StrategyKind.BOTH_ENDS:
        return bld_u < k and bld_v < k, None

    phase_end = state.phase_end if state is not None else 0
    if kind is StrategyKind.ALGO_DEG_K:
        if step <= phase_end:
            if bld_u < k and bld_v < k:
                return True, EFFICIENT
            if exp_u == 0 or exp_v == 0:
                return True, INEFFICIENT
            return False, None
        return bld_u < k or bld_v < k, None

    # algo_deg_1: isolation in the builder graph is all that matters
    if step <= phase_end:
        return bld_u == 0 and bld_v == 0, None
    return bld_u == 0 or bld_v == 0, None


def decide(
    config: StrategyConfig,
    state: StrategyState | None,
    step: int,
    edge: Edge,
    pre_view: tuple[int, int, int, int],
) -> bool:
    return decide_with_tag(config, state, step, edge, pre_view)[0]


def update_sets(
    state: StrategyState,
    edge: Edge,
    purchased: bool,
    tag: str | None = None,
) -> StrategyState:
    """Move the endpoints of one just-exposed edge between vertex classes.

    Purchased endpoints join `touched`; unpurchased endpoints that are not
    yet touched move from `unseen` to `skipped` (the edge exposed them, the
    builder passed). `unseen` always loses both endpoints. `underfull`
    drops endpoints whose builder degree reached k.

    Raises ValueError if an endpoint is recorded as touched while its
    builder degree is still 0: that means expose/update ordering was
    violated upstream.
    """
    u, v = edge
    k = state.config.k
    for w in (u, v):
        if w in state.touched and state.builder_deg[w] == 0:
            raise ValueError(f"vertex {w} marked touched but has no purchased edge")
    if purchased:
        for w in (u, v):
            state.touched.add(w)
            state.skipped.discard(w)
            state.unseen.discard(w)
            if state.builder_deg[w] >= k:
                state.underfull.discard(w)
        state.purchase_count += 1
        if tag == EFFICIENT:
            state.efficient_count += 1
        elif tag == INEFFICIENT:
            state.inefficient_count += 1
    else:
        for w in (u, v):
            if w in state.unseen:
                state.unseen.discard(w)
                state.skipped.add(w)
    return state
