"""Timing comparison of the compiled and pure-Python kernel paths.

Runs the same trial workload through the numba dispatcher and through its
``py_func`` fallback, checks that every output array matches bit for bit,
and prints per-trial timings. Usage:

    python3 benchmarks/bench_kernels.py [--n N] [--trials T]

The pure path executes the identical source, so expect it to be slower by
two to three orders of magnitude; the point of the benchmark is the ratio
and the equality check, not the absolute numbers.
"""
import argparse
import math
import time

import numpy as np

from builderproc._accel import JIT_ENABLED, active
from builderproc.harness import derive_trial_seed
from builderproc.kernels import OUT_SIZE, OUT_STATUS, OUT_STEPS, TR_COLS, next_prime, trial_kernel
from builderproc.strategies import StrategyConfig

WORKLOADS = (
    StrategyConfig(kind="buy_none", k=1),
    StrategyConfig(kind="greedy_knn", k=2),
    StrategyConfig(kind="algo_deg_1", k=1, C=2.0),
)

KIND_CODES = {
    "greedy_knn": 0,
    "both_ends": 1,
    "algo_deg_k": 2,
    "algo_deg_1": 3,
    "buy_all": 4,
    "buy_none": 5,
}


def build_args(n, strategy, seed):
    total = n * (n - 1) // 2
    k = strategy.k
    budget = int(0.5 * n * (math.log(n) + (k - 1) * max(0.0, math.log(math.log(n))))) + 5 * n + 64
    draw_count = 4 * min(budget, total) + 4096
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, n, size=2 * draw_count, dtype=np.int64)
    table = np.full(next_prime(min(draw_count, 2 * total) + 17), -1, dtype=np.int64)
    pe = strategy.phase_end(n) if strategy.kind.value in ("both_ends", "algo_deg_k", "algo_deg_1") else 0
    out = np.full(OUT_SIZE, -1, dtype=np.int64)
    out[OUT_STATUS] = 0
    return (
        np.int64(n),
        np.int64(KIND_CODES[strategy.kind.value]),
        np.int64(k),
        np.int64(pe),
        np.int64(0),
        draws,
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.int64),
        np.int64(0),
        np.int64(pe),
        np.int64(0),
        np.int64(0),
        np.empty(0, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        table,
        np.zeros(n, dtype=np.int64),
        np.zeros(n, dtype=np.int64),
        np.zeros(1, dtype=np.int64),
        np.zeros((0, TR_COLS), dtype=np.int64),
        out,
    )


def run_path(fn, n, strategy, seed, trials):
    best = math.inf
    last = None
    for trial in range(trials):
        args = build_args(n, strategy, seed)
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
        assert args[-1][OUT_STATUS] == 0, "draw budget exhausted; raise --n margins"
        last = args
    return best, last


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=5000)
    parser.add_argument("--trials", type=int, default=3, help="timed repetitions per path")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not JIT_ENABLED:
        print("note: compiled path unavailable or disabled; timing the pure path only")

    print(f"n={args.n}, per-path repetitions={args.trials}")
    header = f"{'strategy':<14} {'steps':>9} {'jit ms':>10} {'python ms':>12} {'ratio':>8}  equal"
    print(header)
    print("-" * len(header))
    for strategy in WORKLOADS:
        seed = derive_trial_seed(args.seed, 0)
        jit_time = None
        jit_args = None
        if JIT_ENABLED:
            fn = active(trial_kernel)
            fn(*build_args(args.n, strategy, seed))  # compile outside the timer
            jit_time, jit_args = run_path(fn, args.n, strategy, seed, args.trials)
        py_time, py_args = run_path(trial_kernel.py_func, args.n, strategy, seed, max(1, args.trials // 3))
        if jit_args is not None:
            equal = all(
                np.array_equal(a, b)
                for a, b in zip(jit_args, py_args)
                if isinstance(a, np.ndarray)
            )
            ratio = py_time / jit_time
            print(
                f"{strategy.kind.value:<14} {int(py_args[-1][OUT_STEPS]):>9}"
                f" {jit_time*1e3:>10.2f} {py_time*1e3:>12.1f} {ratio:>7.0f}x  {equal}"
            )
            if not equal:
                raise SystemExit("kernel paths disagree")
        else:
            print(
                f"{strategy.kind.value:<14} {int(py_args[-1][OUT_STEPS]):>9}"
                f" {'-':>10} {py_time*1e3:>12.1f} {'-':>8}  -"
            )


if __name__ == "__main__":
    main()
