"""Command-line front end.

Subcommands: run (Monte Carlo batches), analytic (closed-form constants),
oracle (exact small-instance distributions), phi (rank-pair densities),
lemma (success rate vs class-ratio estimate), trace (vertex-class
trajectory of one trial).

Every output is a deterministic function of the arguments; nothing prints
timestamps or timings to stdout. Exit codes: 0 success, 2 usage error
(with a diagnostic naming the violated invariant on stderr), 3 unexpected
runtime failure.

If --seed is omitted, the BUILDERPROC_SEED environment variable (when set)
supplies the default master seed; otherwise 0 is used.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from .analytics import (
    hitting_time_estimate,
    knn_edge_density,
    overlap_series,
    poisson_degree_fraction,
    rank_pair_density,
)
from .harness import (
    Aggregate,
    RunConfig,
    _AGG_FIELDS,
    enumerate_exact,
    phi_experiment,
    run_trials,
    success_prob_experiment,
    trace_experiment,
    write_csv,
    write_ndjson,
)
from .process import StreamMode
from .strategies import PHASED_KINDS, StrategyConfig, StrategyKind

SEED_ENV = "BUILDERPROC_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}")
    if seed < 0:
        raise ValueError(f"{SEED_ENV} must be non-negative")
    return seed


@dataclass(frozen=True)
class ExperimentConfig:
    """JSON-serializable description of one `run` invocation.

    The strategy sub-dict uses the StrategyConfig dictionary form. Unknown
    keys anywhere are rejected, and to_json/from_json round-trip losslessly.
    """

    n: int
    strategy: dict
    trials: int = 1
    master_seed: int = 0
    stream_mode: str = StreamMode.REJECTION_COUPLED.value
    track_connectivity: bool = False
    rank_cap: int = 0
    checkpoints: tuple = ()
    out: str | None = None
    format: str = "ndjson"
    jobs: int = 1
    phi_min_degree: int | None = None
    phi_cap: int | None = None

    def __post_init__(self):
        StrategyConfig.from_dict(self.strategy)
        object.__setattr__(self, "checkpoints", tuple(self.checkpoints))
        if self.format not in ("csv", "ndjson"):
            raise ValueError("format must be csv or ndjson")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config JSON must be an object")
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "n" not in data or "strategy" not in data:
            raise ValueError("config requires n and strategy")
        return cls(**data)

    def to_run_config(self) -> RunConfig:
        return RunConfig(
            n=self.n,
            strategy=StrategyConfig.from_dict(self.strategy),
            stream_mode=StreamMode(self.stream_mode),
            track_connectivity=self.track_connectivity,
            rank_cap=self.rank_cap,
            checkpoints=self.checkpoints,
        )


def _strategy_from_args(args) -> StrategyConfig:
    kwargs = {"kind": args.strategy, "k": args.k}
    if getattr(args, "C", None) is not None:
        kwargs["C"] = args.C
    if getattr(args, "delta", None) is not None:
        kwargs["delta"] = args.delta
    if getattr(args, "epsilon", None) is not None:
        kwargs["epsilon"] = args.epsilon
    return StrategyConfig(**kwargs)


def _print_aggregate(agg: Aggregate, strategy: StrategyConfig) -> None:
    print(f"n, {agg.n}")
    print(f"strategy, {strategy.kind.value}")
    print(f"k, {strategy.k}")
    print(f"trials, {agg.trials}")
    print(f"success_count, {agg.success_count}")
    print(f"success_rate, {agg.success_rate!r}")
    print(f"wilson_low, {agg.wilson_low!r}")
    print(f"wilson_high, {agg.wilson_high!r}")
    for name in _AGG_FIELDS:
        print(f"mean_{name}, {agg.field_means[name]!r}")
        print(f"std_{name}, {agg.field_stddevs[name]!r}")
    for (r, s), dens in agg.rank_pair_density_means.items():
        print(f"density_{r}_{s}, {dens!r}")


def cmd_run(args) -> int:
    if args.config is not None:
        if args.n is not None:
            raise ValueError("--config and --n are mutually exclusive")
        with open(args.config, "r", encoding="utf-8") as fh:
            config = ExperimentConfig.from_json(fh.read())
    else:
        if args.n is None:
            raise ValueError("either --config or --n is required")
        strategy = _strategy_from_args(args)
        config = ExperimentConfig(
            n=args.n,
            strategy=strategy.to_dict(),
            trials=args.trials,
            master_seed=args.seed if args.seed is not None else _default_seed(),
            stream_mode=args.stream_mode,
            track_connectivity=args.track_connectivity,
            rank_cap=args.rank_cap,
            out=args.out,
            format=args.format,
            jobs=args.jobs,
        )
    if args.save_config is not None:
        with open(args.save_config, "w", encoding="utf-8") as fh:
            fh.write(config.to_json() + "\n")
    run_config = config.to_run_config()
    strategy = run_config.strategy
    agg = run_trials(run_config, config.master_seed, config.trials, config.jobs)
    _print_aggregate(agg, strategy)
    if config.out:
        if config.format == "ndjson":
            write_ndjson(agg.results, config.out)
        else:
            write_csv(agg.results, config.out)
    return 0


def cmd_analytic(args) -> int:
    chosen = [
        name
        for name, value in (
            ("--ok", args.ok),
            ("--f", args.f),
            ("--mu-rs", args.mu_rs),
            ("--mu-d", args.mu_d or None),
            ("--tau-est", args.tau_est),
        )
        if value is not None
    ]
    if len(chosen) != 1:
        raise ValueError(
            "choose exactly one of --ok, --f, --mu-rs, --mu-d, --tau-est"
        )
    if args.ok is not None:
        frac = knn_edge_density(args.ok)
        print(f"{frac} = {float(frac)!r}")
    elif args.f is not None:
        frac = overlap_series(args.f)
        print(f"{frac} = {float(frac)!r}")
    elif args.mu_rs is not None:
        r, s = args.mu_rs
        frac = rank_pair_density(r, s)
        print(f"{frac} = {float(frac)!r}")
    elif args.mu_d:
        if args.C is None or args.d is None:
            raise ValueError("--mu-d requires --C and --d")
        print(f"{poisson_degree_fraction(args.C, args.d):.6f}")
    else:
        if args.n is None:
            raise ValueError("--tau-est requires --n")
        print(f"{hitting_time_estimate(args.n, args.tau_est)!r}")
    return 0


def cmd_oracle(args) -> int:
    strategy = None
    rank_cell = None
    if args.statistic == "strategy":
        if args.strategy is None:
            raise ValueError("statistic 'strategy' requires --strategy")
        strategy = _strategy_from_args(args)
    if args.statistic == "phi":
        if args.r is None or args.s is None:
            raise ValueError("statistic 'phi' requires --r and --s")
        rank_cell = (args.r, args.s)
    pmf = enumerate_exact(args.n, args.statistic, strategy=strategy, rank_cell=rank_cell)
    for key, prob in pmf.items():
        if isinstance(key, tuple):
            label = ";".join(str(int(part)) for part in key)
        else:
            label = str(key)
        print(f"{label}, {prob}")
    return 0


def cmd_phi(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    report = phi_experiment(args.n, args.D, cap=args.cap, seed=seed)
    print(f"n, {report['n']}")
    print(f"min_degree, {report['min_degree']}")
    print(f"hitting_step, {report['hitting_step']}")
    for (r, s), count in report["counts"].items():
        print(f"{r}, {s}, {count}, {report['densities'][(r, s)]!r}")
    return 0


def cmd_lemma(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    report = success_prob_experiment(
        args.n, args.C, args.trials, master_seed=seed, parallelism=args.jobs
    )
    print(f"n, {report['n']}")
    print(f"C, {report['C']!r}")
    print(f"trials, {report['trials']}")
    print(f"success_rate, {report['success_rate']!r}")
    print(f"mean_ratio, {report['mean_ratio']!r}")
    print(f"gap, {report['gap']!r}")
    return 0


def cmd_trace(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.C is None:
        raise ValueError("trace requires --C to fix the observation horizon")
    kind = StrategyKind(args.strategy)
    if kind in PHASED_KINDS:
        strategy = _strategy_from_args(args)
    else:
        # C is only the observation horizon here; these kinds take no C
        strategy = StrategyConfig(kind=kind, k=args.k)
    checkpoints = None
    if args.checkpoints:
        checkpoints = tuple(int(part) for part in args.checkpoints.split(","))
    trace = trace_experiment(args.n, args.C, strategy, checkpoints=checkpoints, seed=seed)
    print("step, touched, skipped, unseen, underfull, purchases, first_incident, first_incident_purchased")
    for i, step in enumerate(trace.checkpoints):
        print(
            f"{step}, {trace.touched[i]}, {trace.skipped[i]}, {trace.unseen[i]},"
            f" {trace.underfull[i]}, {trace.purchases[i]},"
            f" {trace.first_incident_edges[i]}, {trace.first_incident_purchased[i]}"
        )
    return 0


def _add_strategy_flags(sub, *, require: bool) -> None:
    sub.add_argument(
        "--strategy",
        choices=[kind.value for kind in StrategyKind],
        required=require,
        default=None,
    )
    sub.add_argument("--k", type=int, default=1)
    sub.add_argument("--C", type=float, default=None)
    sub.add_argument("--delta", type=float, default=None)
    sub.add_argument("--epsilon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="builderproc",
        description="Budget-constrained online graph process: simulator and analytics.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run a batch of trials and aggregate")
    run.add_argument("--n", type=int, default=None)
    _add_strategy_flags(run, require=False)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=["csv", "ndjson"], default="ndjson")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument(
        "--stream-mode",
        choices=[mode.value for mode in StreamMode],
        default=StreamMode.REJECTION_COUPLED.value,
    )
    run.add_argument("--track-connectivity", action="store_true")
    run.add_argument("--rank-cap", type=int, default=0)
    run.add_argument("--config", default=None, help="load an ExperimentConfig JSON file")
    run.add_argument("--save-config", default=None, help="write the effective config as JSON")
    run.set_defaults(func=cmd_run)

    analytic = subs.add_parser("analytic", help="print closed-form constants")
    analytic.add_argument("--ok", type=int, default=None, help="edge density of the k-nearest graph")
    analytic.add_argument("--f", type=int, default=None, help="overlap series value")
    analytic.add_argument("--mu-rs", type=int, nargs=2, default=None, metavar=("R", "S"))
    analytic.add_argument("--mu-d", action="store_true", help="Poisson degree fraction; needs --C --d")
    analytic.add_argument("--C", type=float, default=None)
    analytic.add_argument("--d", type=int, default=None)
    analytic.add_argument("--tau-est", type=int, default=None, metavar="K")
    analytic.add_argument("--n", type=int, default=None)
    analytic.set_defaults(func=cmd_analytic)

    oracle = subs.add_parser("oracle", help="exact distributions for n <= 5")
    oracle.add_argument("--n", type=int, required=True)
    oracle.add_argument(
        "--statistic",
        required=True,
        choices=["tau1", "taucon", "e_o1", "phi", "strategy"],
    )
    oracle.add_argument("--r", type=int, default=None)
    oracle.add_argument("--s", type=int, default=None)
    _add_strategy_flags(oracle, require=False)
    oracle.set_defaults(func=cmd_oracle)

    phi = subs.add_parser("phi", help="rank-pair densities of the raw process")
    phi.add_argument("--n", type=int, required=True)
    phi.add_argument("--D", type=int, required=True)
    phi.add_argument("--cap", type=int, default=None)
    phi.add_argument("--seed", type=int, default=None)
    phi.set_defaults(func=cmd_phi)

    lemma = subs.add_parser("lemma", help="success rate vs class-ratio estimate")
    lemma.add_argument("--n", type=int, required=True)
    lemma.add_argument("--C", type=float, required=True)
    lemma.add_argument("--trials", type=int, required=True)
    lemma.add_argument("--seed", type=int, default=None)
    lemma.add_argument("--jobs", type=int, default=1)
    lemma.set_defaults(func=cmd_lemma)

    trace = subs.add_parser("trace", help="vertex-class trajectory of one trial")
    trace.add_argument("--n", type=int, required=True)
    _add_strategy_flags(trace, require=True)
    trace.add_argument("--checkpoints", default=None, help="comma-separated steps")
    trace.add_argument("--seed", type=int, default=None)
    trace.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code in (0, None):
            return 0
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
