"""Hot trial loop, compiled with numba when available.

One kernel runs a whole trial: edge generation (rejection sampling against
an open-addressing table, or a supplied explicit edge list), the strategy
decision, degree/connectivity bookkeeping, phase snapshots and trace rows.
Everything is int64 in, int64 out; the wrapper in `harness` allocates the
arrays and interprets the result slots.

The kernel consumes a pre-generated buffer of raw vertex draws instead of
calling the RNG itself, so the compiled and interpreted variants (and the
pure-python reference loop) see literally the same random stream. If the
buffer runs out the kernel reports exhaustion and the wrapper retries with
a longer buffer from the same seed; the generator's output is
prefix-stable, so the replay walks the identical trajectory.
"""
from __future__ import annotations

from ._accel import jit_kernel

# result slots -------------------------------------------------------------
OUT_STATUS = 0              # 0 done, 1 draw buffer exhausted
OUT_HIT_STEP = 1            # first step with min exposed degree >= k, or -1
OUT_CONNECT_STEP = 2        # first step with one component, or -1
OUT_PURCHASES = 3
OUT_MIN_BUILDER_AT_HIT = 4  # min builder degree at the hitting step, or -1
OUT_EFFICIENT = 5
OUT_INEFFICIENT = 6
OUT_TOUCHED_PE = 7          # class sizes at the phase horizon (-1: not reached)
OUT_SKIPPED_PE = 8
OUT_UNSEEN_PE = 9
OUT_UNDERFULL_PE = 10
OUT_MAX_SKIPPED = 11        # max skipped-class size over steps <= phase horizon
OUT_PURCHASES_PE = 12
OUT_STEPS = 13
OUT_REP_DRAWS = 14          # raw non-self pair draws, incl. repeats (-1: edge-list mode)
OUT_SELF_DRAWS = 15
OUT_DRAWS_USED = 16         # buffer slots consumed
OUT_RANK_OVERFLOW = 17
OUT_PHASE_END_REACHED = 18
OUT_MIN_BUILDER_FINAL = 19
OUT_UNDERFULL_FINAL = 20
OUT_FIRST_INC_TOTAL = 21    # edges that were some endpoint's first exposure
OUT_FIRST_INC_PURCHASED = 22
OUT_TRACE_ROWS = 23
OUT_SIZE = 24

# trace row columns --------------------------------------------------------
TR_STEP = 0
TR_TOUCHED = 1
TR_SKIPPED = 2
TR_UNSEEN = 3
TR_PURCHASES = 4
TR_FIRST_INC = 5
TR_FIRST_INC_PURCHASED = 6
TR_UNDERFULL = 7
TR_COLS = 8

# strategy kind codes (mirrors strategies.KIND_CODES)
K_GREEDY = 0
K_BOTH_ENDS = 1
K_ALGO_DEG_K = 2
K_ALGO_DEG_1 = 3
K_BUY_ALL = 4
K_BUY_NONE = 5


def next_prime(m: int) -> int:
    """Smallest prime >= m (trial division; table sizes stay modest)."""
    if m <= 2:
        return 2
    candidate = m | 1
    while True:
        is_prime = True
        d = 3
        while d * d <= candidate:
            if candidate % d == 0:
                is_prime = False
                break
            d += 2
        if is_prime and candidate % 2 != 0:
            return candidate
        candidate += 2


@jit_kernel
def trial_kernel(n, kind, k, phase_end, mode, draws, eu, ev,
                 fixed_steps, min_steps, need_taucon, rank_cap,
                 checkpoints, parent, table, exposed, builder,
                 rank_counts, trace, out):
    table_size = table.shape[0]
    ncheck = checkpoints.shape[0]
    cap1 = rank_cap + 1

    step = 0
    pos = 0
    filled = 0
    purchases = 0
    efficient = 0
    inefficient = 0
    rep_draws = 0
    self_draws = 0
    overflow = 0
    first_inc_total = 0
    first_inc_purchased = 0
    trace_idx = 0

    unseen = n        # exposed-isolated vertices
    builder_iso = n   # builder-isolated vertices
    underfull = n     # vertices with builder degree < k
    low_exposed = n   # vertices with exposed degree < k
    comp = n

    hit_step = -1
    connect_step = -1
    min_builder_at_hit = -1
    max_skipped = 0

    while True:
        cont = False
        if fixed_steps > 0:
            if step < fixed_steps:
                cont = True
        else:
            if hit_step < 0:
                cont = True
            if need_taucon == 1 and connect_step < 0:
                cont = True
        if step < min_steps:
            cont = True
        if not cont:
            break

        # next distinct edge
        u = -1
        v = -1
        if mode == 0:
            found = False
            while pos + 1 < draws.shape[0]:
                a = draws[pos]
                b = draws[pos + 1]
                pos += 2
                if a == b:
                    self_draws += 1
                    continue
                rep_draws += 1
                if a > b:
                    t = a
                    a = b
                    b = t
                key = a * n + b
                idx = key % table_size
                fresh = False
                while True:
                    cur = table[idx]
                    if cur == key:
                        break
                    if cur == -1:
                        # keep load <= 1/2 so probes stay short and can
                        # never cycle; a fuller table means the caller's
                        # budget was too small, which is the same
                        # exhaustion case as running out of draws
                        if (filled + 1) * 2 > table_size:
                            out[OUT_STATUS] = 1
                            out[OUT_DRAWS_USED] = pos
                            return
                        table[idx] = key
                        filled += 1
                        fresh = True
                        break
                    idx += 1
                    if idx == table_size:
                        idx = 0
                if fresh:
                    u = a
                    v = b
                    found = True
                    break
            if not found:
                out[OUT_STATUS] = 1
                out[OUT_DRAWS_USED] = pos
                return
        else:
            if step >= eu.shape[0]:
                out[OUT_STATUS] = 1
                return
            u = eu[step]
            v = ev[step]

        step += 1
        pre_eu = exposed[u]
        pre_ev = exposed[v]
        pre_bu = builder[u]
        pre_bv = builder[v]
        first_inc = pre_eu == 0 or pre_ev == 0

        # decision, on the pre-exposure view
        allowed = hit_step < 0
        if kind == K_BOTH_ENDS and phase_end > 0 and step <= phase_end:
            allowed = True
        buy = False
        tag = 0
        if allowed:
            if kind == K_GREEDY:
                buy = pre_bu < k or pre_bv < k
            elif kind == K_BOTH_ENDS:
                buy = pre_bu < k and pre_bv < k
            elif kind == K_ALGO_DEG_K:
                if step <= phase_end:
                    if pre_bu < k and pre_bv < k:
                        buy = True
                        tag = 1
                    elif pre_eu == 0 or pre_ev == 0:
                        buy = True
                        tag = 2
                else:
                    buy = pre_bu < k or pre_bv < k
            elif kind == K_ALGO_DEG_1:
                if step <= phase_end:
                    buy = pre_bu == 0 and pre_bv == 0
                else:
                    buy = pre_bu == 0 or pre_bv == 0
            elif kind == K_BUY_ALL:
                buy = True

        # exposure
        exposed[u] = pre_eu + 1
        exposed[v] = pre_ev + 1
        if pre_eu == 0:
            unseen -= 1
        if pre_ev == 0:
            unseen -= 1
        if pre_eu + 1 == k:
            low_exposed -= 1
        if pre_ev + 1 == k:
            low_exposed -= 1
        r = pre_eu + 1
        s = pre_ev + 1
        if s > r:
            t = r
            r = s
            s = t
        if r > rank_cap:
            overflow += 1
        else:
            rank_counts[r * cap1 + s] += 1
        if first_inc:
            first_inc_total += 1

        # connectivity (path halving, smaller root wins)
        x = u
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        ru = x
        x = v
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        rv = x
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
            comp -= 1
            if comp == 1 and connect_step < 0:
                connect_step = step

        if buy:
            if pre_bu == 0:
                builder_iso -= 1
            if pre_bv == 0:
                builder_iso -= 1
            if pre_bu + 1 == k:
                underfull -= 1
            if pre_bv + 1 == k:
                underfull -= 1
            builder[u] = pre_bu + 1
            builder[v] = pre_bv + 1
            purchases += 1
            if tag == 1:
                efficient += 1
            elif tag == 2:
                inefficient += 1
            if first_inc:
                first_inc_purchased += 1

        if hit_step < 0 and low_exposed == 0:
            hit_step = step
            mb = builder[0]
            for i in range(1, n):
                if builder[i] < mb:
                    mb = builder[i]
            min_builder_at_hit = mb

        if phase_end > 0 and step <= phase_end:
            skipped = builder_iso - unseen
            if skipped > max_skipped:
                max_skipped = skipped
            if step == phase_end:
                out[OUT_TOUCHED_PE] = n - builder_iso
                out[OUT_SKIPPED_PE] = skipped
                out[OUT_UNSEEN_PE] = unseen
                out[OUT_UNDERFULL_PE] = underfull
                out[OUT_PURCHASES_PE] = purchases
                out[OUT_PHASE_END_REACHED] = 1

        if trace_idx < ncheck and step == checkpoints[trace_idx]:
            trace[trace_idx, TR_STEP] = step
            trace[trace_idx, TR_TOUCHED] = n - builder_iso
            trace[trace_idx, TR_SKIPPED] = builder_iso - unseen
            trace[trace_idx, TR_UNSEEN] = unseen
            trace[trace_idx, TR_PURCHASES] = purchases
            trace[trace_idx, TR_FIRST_INC] = first_inc_total
            trace[trace_idx, TR_FIRST_INC_PURCHASED] = first_inc_purchased
            trace[trace_idx, TR_UNDERFULL] = underfull
            trace_idx += 1

    mb = builder[0]
    for i in range(1, n):
        if builder[i] < mb:
            mb = builder[i]

    out[OUT_STATUS] = 0
    out[OUT_HIT_STEP] = hit_step
    out[OUT_CONNECT_STEP] = connect_step
    out[OUT_PURCHASES] = purchases
    out[OUT_MIN_BUILDER_AT_HIT] = min_builder_at_hit
    out[OUT_EFFICIENT] = efficient
    out[OUT_INEFFICIENT] = inefficient
    out[OUT_MAX_SKIPPED] = max_skipped
    out[OUT_STEPS] = step
    if mode == 0:
        out[OUT_REP_DRAWS] = rep_draws
        out[OUT_SELF_DRAWS] = self_draws
    else:
        out[OUT_REP_DRAWS] = -1
        out[OUT_SELF_DRAWS] = -1
    out[OUT_DRAWS_USED] = pos
    out[OUT_RANK_OVERFLOW] = overflow
    out[OUT_MIN_BUILDER_FINAL] = mb
    out[OUT_UNDERFULL_FINAL] = underfull
    out[OUT_FIRST_INC_TOTAL] = first_inc_total
    out[OUT_FIRST_INC_PURCHASED] = first_inc_purchased
    out[OUT_TRACE_ROWS] = trace_idx


@jit_kernel
def last_covered_kernel(n, draws, member, covered, out):
    """Cover `member` vertices with raw with-repetition pair draws.

    Every non-self drawn pair touches both endpoints, whether or not the
    edge is new. Records which member vertex was covered last. out[0]:
    status (0 done, 1 buffer exhausted); out[1]: last vertex covered, -1 on
    tie (final draw covered two members at once); out[2]: draws consumed;
    out[3]: self draws skipped.
    """
    remaining = 0
    for i in range(n):
        covered[i] = 0
        if member[i] == 1:
            remaining += 1
    pos = 0
    self_draws = 0
    last = -1
    tie = False
    while remaining > 0:
        if pos + 1 >= draws.shape[0]:
            out[0] = 1
            out[2] = pos
            return
        u = draws[pos]
        v = draws[pos + 1]
        pos += 2
        if u == v:
            self_draws += 1
            continue
        new_u = member[u] == 1 and covered[u] == 0
        new_v = member[v] == 1 and covered[v] == 0
        if new_u:
            covered[u] = 1
            remaining -= 1
            last = u
        if new_v:
            covered[v] = 1
            remaining -= 1
            last = v
        if new_u and new_v and remaining == 0:
            tie = True
    out[0] = 0
    out[1] = -1 if tie else last
    out[2] = pos
    out[3] = self_draws
