"""Closed-form quantities for the edge process, used as test oracles.

Everything rational is computed with exact ``fractions.Fraction`` arithmetic.
Floating point appears only where it is forced: Poisson masses (``e^{-c}``)
and the conditional rank-pair expectation on graphs with large degrees, whose
binomial ratios are evaluated through log-gamma to avoid overflow.

Terminology used throughout the package: when an edge is exposed it raises
one endpoint's exposed degree to some value r and the other's to s <= r; the
pair (r, s) is the edge's *incidence rank pair*. The *k-nearest-neighbour
graph* of the process consists of every edge that is among the first k
incident edges of at least one of its endpoints.
"""
from __future__ import annotations

import math
from fractions import Fraction
from math import comb, lgamma
from typing import Iterable, Sequence


def knn_edge_density(k: int) -> Fraction:
    """Limit of edges-per-vertex in the k-nearest-neighbour graph.

    Computed from the closed sum

        k/2 + (1/4) * sum_{i=0}^{k-1} C(2i, i) / 4^i

    and independently recomputed as ``k - overlap_series(k-1)/4``; the two
    routes are asserted equal on every call.

    Args:
        k: neighbour rank, k >= 1.

    Returns:
        Exact rational density.

    Raises:
        ValueError: if k < 1.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError("k must be an integer >= 1")
    total = Fraction(k, 2) + Fraction(1, 4) * sum(
        Fraction(comb(2 * i, i), 4**i) for i in range(k)
    )
    via_series = k - overlap_series(k - 1) / 4
    assert total == via_series, "closed sum and series route disagree"
    return total


def overlap_series(k: int) -> Fraction:
    """Double binomial sum governing two-sided rank overlap of an edge.

    Defined by the recurrence

        g(0) = 1,   g(k) = g(k-1) + 2 - C(2k, k) / 4^k

    and independently by the double sum

        g(k) = sum_{i=0}^{k} sum_{j=0}^{k} C(i+j, i) / 2^{i+j},

    asserted equal on every call. ``knn_edge_density(k)`` equals
    ``k - overlap_series(k-1)/4``.

    Args:
        k: non-negative integer.

    Returns:
        Exact rational value.

    Raises:
        ValueError: if k < 0.
    """
    if not isinstance(k, int) or k < 0:
        raise ValueError("k must be an integer >= 0")
    value = Fraction(1)
    for i in range(1, k + 1):
        value += 2 - Fraction(comb(2 * i, i), 4**i)
    double_sum = sum(
        Fraction(comb(i + j, i), 2 ** (i + j))
        for i in range(k + 1)
        for j in range(k + 1)
    )
    assert value == double_sum, "recurrence and double sum disagree"
    return value


def poisson_degree_fraction(c: float, d: int) -> float:
    """Expected fraction of vertices of degree d when degrees are Poisson(c).

    Args:
        c: Poisson mean, c > 0.
        d: degree, d >= 0.

    Returns:
        c^d e^{-c} / d! as a float, computed in log space so that large d
        and c do not overflow.
    """
    c = float(c)
    if c <= 0:
        raise ValueError("c must be positive")
    if not isinstance(d, int) or d < 0:
        raise ValueError("d must be an integer >= 0")
    if d == 0:
        return math.exp(-c)
    return math.exp(d * math.log(c) - c - lgamma(d + 1))


def rank_pair_density(r: int, s: int) -> Fraction:
    """Whole-process per-vertex density of edges with incidence rank pair (r, s).

    Equals ``C(r+s-1, s-1) * 2^{-(r+s-1)}``, halved when r = s because the
    two endpoints then play symmetric roles.

    Args:
        r: higher rank, r >= s.
        s: lower rank, s >= 1.

    Returns:
        Exact rational density.

    Raises:
        ValueError: if r < s or s < 1.
    """
    if not isinstance(r, int) or not isinstance(s, int):
        raise ValueError("r and s must be integers")
    if s < 1 or r < s:
        raise ValueError("require r >= s >= 1 (canonical order)")
    halve = 1 if r == s else 0
    return Fraction(comb(r + s - 1, s - 1), 2 ** (r + s - 1 + halve))


def _log_comb(a: int, b: int) -> float:
    return lgamma(a + 1) - lgamma(b + 1) - lgamma(a - b + 1)


def expected_rank_pair_count(
    edges: Sequence[tuple[int, int]],
    r: int,
    s: int,
    degrees: Sequence[int] | None = None,
    exact: bool = False,
) -> float | Fraction:
    """Expected number of (r, s) rank-pair edges over a uniform ordering of E(G).

    For a fixed graph G revealed in uniformly random edge order, the
    expectation of the number of edges whose exposure raises one endpoint to
    degree r and the other to degree s is

        (1/2^{[r=s]}) * sum over ordered adjacent pairs (u, v) of
            [1 / (deg u + deg v - 1)]
            * C(deg u - 1, r - 1) * C(deg v - 1, s - 1)
              / C(deg u + deg v - 2, r + s - 2).

    Each edge contributes through both of its ordered endpoint pairs; the
    halving at r = s compensates for the two orderings describing the same
    event. Terms with r - 1 > deg u - 1 (or the symmetric condition) are
    zero.

    Args:
        edges: edge list of G; vertex labels are arbitrary hashables.
        r: higher rank, r >= s >= 1.
        s: lower rank.
        degrees: optional degree mapping checked against the edge list.
        exact: return an exact Fraction (small degrees only) instead of a
            float computed via log-gamma.

    Returns:
        The conditional expectation, exact or floating point.
    """
    if s < 1 or r < s:
        raise ValueError("require r >= s >= 1 (canonical order)")
    deg: dict = {}
    for u, v in edges:
        if u == v:
            raise ValueError("self-loops are not allowed")
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    if degrees is not None:
        expected = list(degrees)
        actual = [deg.get(i, 0) for i in range(len(expected))]
        if actual != expected:
            raise ValueError("degree list inconsistent with edge list")

    halve = r == s
    if exact:
        total_f = Fraction(0)
        for u, v in edges:
            for a, b in ((u, v), (v, u)):
                da, db = deg[a], deg[b]
                if r - 1 > da - 1 or s - 1 > db - 1:
                    continue
                total_f += Fraction(comb(da - 1, r - 1) * comb(db - 1, s - 1),
                                    comb(da + db - 2, r + s - 2) * (da + db - 1))
        return total_f / 2 if halve else total_f

    total = 0.0
    for u, v in edges:
        for a, b in ((u, v), (v, u)):
            da, db = deg[a], deg[b]
            if r - 1 > da - 1 or s - 1 > db - 1:
                continue
            log_term = (
                _log_comb(da - 1, r - 1)
                + _log_comb(db - 1, s - 1)
                - _log_comb(da + db - 2, r + s - 2)
                - math.log(da + db - 1)
            )
            total += math.exp(log_term)
    return total / 2 if halve else total


def rank_pair_cells(max_degree_sum: int) -> Iterable[tuple[int, int]]:
    """All canonical (r, s) cells with r >= s >= 1 and r + s <= max_degree_sum."""
    for r in range(1, max_degree_sum):
        for s in range(1, r + 1):
            if r + s <= max_degree_sum:
                yield (r, s)


def hitting_time_estimate(n: int, k: int) -> float:
    """Center of the window where minimum exposed degree first reaches k.

    Args:
        n: vertex count, n >= 3.
        k: degree target, k >= 1.

    Returns:
        (n/2) * (ln n + (k-1) ln ln n).
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    return 0.5 * n * (math.log(n) + (k - 1) * math.log(math.log(n)))
