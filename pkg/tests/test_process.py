"""Edge stream and exact process-state behaviour."""
import math

import numpy as np
import pytest

from builderproc.process import (
    EdgeStream,
    FULL_PERMUTATION_LIMIT,
    ProcessState,
    RankPairTable,
    StreamExhausted,
    StreamMode,
    connectivity_hitting,
    full_permutation_arrays,
    hitting_reached,
    new_stream,
    phase_horizon,
)


class TestEdgeStream:
    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            EdgeStream(1, 0)
        with pytest.raises(ValueError):
            EdgeStream(10, -1)
        with pytest.raises(ValueError):
            EdgeStream(10, 2**64)
        with pytest.raises(ValueError):
            EdgeStream(10, 0, mode="shuffled")
        with pytest.raises(ValueError):
            EdgeStream(FULL_PERMUTATION_LIMIT + 1, 0, mode=StreamMode.FULL_PERMUTATION)

    @pytest.mark.parametrize("mode", list(StreamMode))
    def test_emits_each_edge_once(self, mode):
        n = 9
        stream = new_stream(n, 42, mode)
        edges = list(stream)
        assert len(edges) == n * (n - 1) // 2
        assert len(set(edges)) == len(edges)
        for u, v in edges:
            assert 0 <= u < v < n
        with pytest.raises(StreamExhausted):
            stream.next_edge()

    @pytest.mark.parametrize("mode", list(StreamMode))
    def test_deterministic_in_seed(self, mode):
        a = list(new_stream(8, 123, mode))
        b = list(new_stream(8, 123, mode))
        c = list(new_stream(8, 124, mode))
        assert a == b
        assert a != c

    def test_n2_single_edge(self):
        for mode in StreamMode:
            assert list(new_stream(2, 5, mode)) == [(0, 1)]

    def test_rejection_counters(self):
        n = 6
        stream = new_stream(n, 2, StreamMode.REJECTION_COUPLED)
        edges = list(stream)
        assert len(edges) == 15
        # every draw is either a self pair or a non-self pair
        assert stream.self_draws >= 0
        # each of the 15 emissions consumed at least one non-self draw
        assert stream.repetition_draws >= 15
        assert len(stream.exposed_set) == 15

    def test_rejection_skips_repeats(self):
        # replay the raw pair stream by hand and check the stream agrees
        n = 5
        seed = 77
        stream = new_stream(n, seed, StreamMode.REJECTION_COUPLED)
        emitted = [stream.next_edge() for _ in range(10)]

        rng = np.random.default_rng(seed)
        raw = rng.integers(0, n, size=4096, dtype=np.int64)
        seen = set()
        expect = []
        pos = 0
        while len(expect) < 10:
            u, v = int(raw[pos]), int(raw[pos + 1])
            pos += 2
            if u == v:
                continue
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                continue
            seen.add((u, v))
            expect.append((u, v))
        assert emitted == expect

    def test_full_permutation_shares_construction(self):
        n, seed = 12, 9
        eu, ev = full_permutation_arrays(n, seed)
        stream = new_stream(n, seed, StreamMode.FULL_PERMUTATION)
        edges = list(stream)
        assert edges == [(int(a), int(b)) for a, b in zip(eu, ev)]

    @pytest.mark.parametrize("mode", list(StreamMode))
    def test_first_pair_uniform(self, mode):
        # chi-square over the 30 ordered (first, second) edge pairs of K_4
        n = 4
        trials = 30000
        counts = {}
        for seed in range(trials):
            stream = new_stream(n, seed, mode)
            pair = (stream.next_edge(), stream.next_edge())
            counts[pair] = counts.get(pair, 0) + 1
        assert len(counts) == 30
        expected = trials / 30
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # 29 dof, 99.9% quantile is 58.3
        assert chi2 < 58.3

    def test_repetitions_stay_small(self):
        # by the degree-1 hitting time of a large run, repeated draws are
        # rare: far fewer than (ln n)^3
        n = 100_000
        stream = new_stream(n, 31, StreamMode.REJECTION_COUPLED)
        target = int(0.5 * n * math.log(n) * 1.1)
        for _ in range(target):
            stream.next_edge()
        repeats = stream.repetition_draws - stream.emitted
        assert repeats < math.log(n) ** 3


class TestProcessState:
    def test_expose_updates_degrees(self):
        st = ProcessState(4, k_max=2)
        rec = st.expose((0, 1))
        assert rec.step == 1
        assert rec.rank_high == 1 and rec.rank_low == 1
        assert rec.first_incident
        assert list(st.exposed_deg) == [1, 1, 0, 0]
        assert list(st.builder_deg) == [0, 0, 0, 0]
        rec = st.expose((0, 2), purchase=True)
        assert rec.rank_high == 2 and rec.rank_low == 1
        assert list(st.exposed_deg) == [2, 1, 1, 0]
        assert list(st.builder_deg) == [1, 0, 1, 0]
        assert st.builder_edges == [(0, 2)]

    def test_duplicate_edge_rejected(self):
        st = ProcessState(4, k_max=1)
        st.expose((0, 1))
        with pytest.raises(ValueError):
            st.expose((0, 1))

    def test_noncanonical_edge_rejected(self):
        st = ProcessState(4, k_max=1)
        with pytest.raises(ValueError):
            st.expose((1, 0))
        with pytest.raises(ValueError):
            st.expose((2, 2))
        with pytest.raises(ValueError):
            st.expose((0, 4))

    def test_low_exposed_count(self):
        st = ProcessState(4, k_max=2)
        assert st.low_exposed_count[1] == 4
        assert st.low_exposed_count[2] == 4
        st.expose((0, 1))
        assert st.low_exposed_count[1] == 2
        assert st.low_exposed_count[2] == 4
        st.expose((0, 2))
        st.expose((0, 3))
        assert st.low_exposed_count[1] == 0
        assert st.low_exposed_count[2] == 3  # only vertex 0 has degree >= 2

    def test_component_count(self):
        st = ProcessState(5, k_max=1)
        assert st.component_count == 5
        st.expose((0, 1))
        st.expose((2, 3))
        assert st.component_count == 3
        st.expose((0, 2))
        assert st.component_count == 2
        st.expose((1, 3))  # same component, no change
        assert st.component_count == 2
        st.expose((3, 4))
        assert st.component_count == 1
        assert connectivity_hitting(st)

    def test_debug_invariants_run(self):
        st = ProcessState(6, k_max=2, debug=True)
        stream = new_stream(6, 4, StreamMode.FULL_PERMUTATION)
        for i, edge in enumerate(stream):
            st.expose(edge, purchase=(i % 2 == 0))

    def test_rank_pair_totality(self):
        # over a full run every exposure lands in exactly one cell
        n = 6
        st = ProcessState(n, k_max=1, rank_cap=8)
        for edge in new_stream(n, 10, StreamMode.FULL_PERMUTATION):
            st.expose(edge)
        total = sum(st.rank_pairs.counts.values()) + st.rank_pairs.overflow_count
        assert total == n * (n - 1) // 2
        for (r, s), count in st.rank_pairs.counts.items():
            assert r >= s >= 1
            assert count > 0

    def test_rank_overflow(self):
        st = ProcessState(8, k_max=1, rank_cap=2)
        for edge in new_stream(8, 3, StreamMode.FULL_PERMUTATION):
            st.expose(edge)
        # the last exposure at a degree-7 vertex must have overflowed
        assert st.rank_pairs.overflow_count > 0
        assert all(r <= 2 for (r, s) in st.rank_pairs.counts)

    def test_hitting_reached(self):
        st = ProcessState(4, k_max=2)
        assert not hitting_reached(st, 1)
        for edge in [(0, 1), (2, 3), (0, 2)]:
            st.expose(edge)
        assert hitting_reached(st, 1)  # degrees 2,1,2,1
        assert not hitting_reached(st, 2)
        st.expose((1, 3))  # closes the 4-cycle, all degrees 2
        assert hitting_reached(st, 2)
        # degrees above k_max fall back to a recount
        assert not hitting_reached(st, 3)
        st.expose((0, 3))
        st.expose((1, 2))
        assert hitting_reached(st, 3)

    def test_hitting_reached_rejects_bad_k(self):
        st = ProcessState(4, k_max=1)
        with pytest.raises(ValueError):
            hitting_reached(st, 0)
        with pytest.raises(ValueError):
            hitting_reached(st, 4)


class TestRankPairTable:
    def test_record_and_densities(self):
        table = RankPairTable(cap=4)
        table.record(1, 1)
        table.record(2, 1)
        table.record(2, 1)
        table.record(5, 1)  # beyond cap
        assert table.counts == {(1, 1): 1, (2, 1): 2}
        assert table.overflow_count == 1
        assert table.total() == 4
        dens = table.densities(8)
        assert dens[(2, 1)] == pytest.approx(0.25)


class TestHittingOrder:
    @pytest.mark.parametrize("mode", list(StreamMode))
    def test_hitting_times_are_ordered(self, mode):
        # tau_1 <= tau_2 <= tau_3 and tau_k >= kn/2 on a shared run
        n = 60
        st = ProcessState(n, k_max=3)
        taus = {}
        for step, edge in enumerate(new_stream(n, 8, mode), start=1):
            st.expose(edge)
            for k in (1, 2, 3):
                if k not in taus and st.low_exposed_count[k] == 0:
                    taus[k] = step
            if len(taus) == 3:
                break
        assert taus[1] <= taus[2] <= taus[3]
        for k in (1, 2, 3):
            assert taus[k] >= math.ceil(k * n / 2)


class TestPhaseHorizon:
    def test_exact_integer_boundaries(self):
        assert phase_horizon(0.3, 100_000) == 30_000
        assert phase_horizon(2.0, 10) == 20
        assert phase_horizon(0.5, 11) == 6  # ceil(5.5)
        assert phase_horizon(1.5, 3) == 5  # ceil(4.5)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            phase_horizon(0.0, 10)
        with pytest.raises(ValueError):
            phase_horizon(-1.0, 10)
