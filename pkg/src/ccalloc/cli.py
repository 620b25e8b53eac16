"""Command-line harness.

    ccalloc gen    --experiment I --n 100 --seed 7 --out a.inst
    ccalloc run    --instance a.inst --algorithm mopd --seed 3
    ccalloc sweep  --experiment I --out-dir results/

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.  All
randomness flows from the explicit seed flags; CCALLOC_WORKERS bounds
the sweep worker pool (default: available parallelism).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import instancefile, oracle, report
from .core import validate
from .experiments import (
    DEFAULT_N_GRID,
    ExperimentSpec,
    algorithm_preset,
    run_sweep,
)
from .solvers import run_solver
from .stats import mix_seed

EXPERIMENTS = {
    "I": ExperimentSpec.experiment_one,
    "II": ExperimentSpec.experiment_two,
    "real-shaped": ExperimentSpec.real_shaped,
}

ALGORITHM_CHOICES = ("opd", "mopd", "mopd-nobeta", "mopd-nocap")


def _positive_int(flag: str):
    def convert(text: str) -> int:
        value = int(text)
        if value < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {value}")
        return value
    return convert


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccalloc",
        description="online chance-constrained resource allocation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic instance file")
    gen.add_argument("--experiment", choices=sorted(EXPERIMENTS), default="I")
    gen.add_argument("--n", type=_positive_int("--n"), required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="solve one instance file and report metrics")
    run.add_argument("--instance", required=True)
    run.add_argument("--algorithm", choices=ALGORITHM_CHOICES, default="mopd")
    run.add_argument("--no-beta", action="store_true",
                     help="disable the history scale-factor correction")
    run.add_argument("--no-capacity", action="store_true",
                     help="disable the capacity-rate correction")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--tie-break", choices=("random", "lowest"), default="random")
    run.add_argument("--step-scale", type=float, default=1.0)
    run.add_argument("--bound", choices=("dual", "brute"), default="dual")
    run.add_argument("--bound-iterations", type=_positive_int("--bound-iterations"),
                     default=2000)
    run.add_argument("--mc-check", type=_positive_int("--mc-check"), default=None,
                     metavar="TRIALS", help="also simulate the chance constraints")
    run.add_argument("--out", default=None, help="also write the report here")

    sweep = sub.add_parser("sweep", help="run a full experiment sweep")
    sweep.add_argument("--experiment", choices=("I", "II"), default="I")
    sweep.add_argument("--n-grid", default=",".join(str(n) for n in DEFAULT_N_GRID),
                       help="comma-separated strictly increasing horizons")
    sweep.add_argument("--trials", type=_positive_int("--trials"), default=20)
    sweep.add_argument("--base-seed", type=int, default=20240901)
    sweep.add_argument("--algorithms", default=",".join(ALGORITHM_CHOICES),
                       help="comma-separated preset names")
    sweep.add_argument("--bound-iterations", type=_positive_int("--bound-iterations"),
                       default=2000)
    sweep.add_argument("--workers", type=_positive_int("--workers"), default=None)
    sweep.add_argument("--out-dir", required=True)
    return parser


def _cmd_gen(args, parser) -> int:
    from .experiments import generate_instance
    spec = EXPERIMENTS[args.experiment]()
    instance = generate_instance(spec, args.n, args.seed)
    instancefile.write(instance, args.out)
    print(f"wrote {args.out}: n={instance.n} m={instance.m} k={instance.k} "
          f"mode={instance.assignment_mode}")
    return 0


def _report_lines(instance, solution, bound, mc_trials, mc_seed) -> list[str]:
    metrics = oracle.compute_metrics(instance, solution.objective,
                                     solution.decisions, bound)
    lines = ["metric,value"]
    pairs = [
        ("objective", metrics.objective),
        ("upper_bound", metrics.upper_bound),
        ("optimality_gap", metrics.optimality_gap),
        ("violation_norm", metrics.violation_norm),
        ("prob_deviation_mean", metrics.prob_deviation_mean),
        ("competitive_ratio", metrics.competitive_ratio),
    ]
    for j, dev in enumerate(metrics.prob_deviation_per_constraint, start=1):
        pairs.append((f"prob_deviation_c{j}", dev))
    if mc_trials:
        empirical = oracle.mc_chance_check(instance, solution.decisions,
                                           mc_trials, mc_seed)
        for j, p in enumerate(empirical, start=1):
            pairs.append((f"mc_satisfaction_c{j}", p))
    lines += [f"{name},{format(float(value), '.17g')}" for name, value in pairs]
    return lines


def _cmd_run(args, parser) -> int:
    instance = instancefile.read(args.instance)
    problems = validate(instance)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    config = algorithm_preset(args.algorithm, rng_seed=args.seed,
                              tie_break=args.tie_break,
                              step_size_scale=args.step_scale)
    if args.no_beta:
        config = replace(config, use_beta_correction=False)
    if args.no_capacity:
        config = replace(config, use_capacity_correction=False)
    solution = run_solver(instance, config)
    if args.bound == "brute":
        bound, _ = oracle.brute_force_offline(instance)
    else:
        bound = oracle.dual_upper_bound(instance, args.bound_iterations,
                                        seed=mix_seed(args.seed, 1))
    lines = _report_lines(instance, solution, bound,
                          args.mc_check, mix_seed(args.seed, 2))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    return 0


def _cmd_sweep(args, parser) -> int:
    try:
        n_grid = tuple(int(tok) for tok in args.n_grid.split(","))
    except ValueError:
        parser.error(f"--n-grid must be comma-separated integers, got {args.n_grid!r}")
    names = [tok.strip() for tok in args.algorithms.split(",") if tok.strip()]
    for name in names:
        if name not in ALGORITHM_CHOICES:
            parser.error(f"--algorithms: unknown preset {name!r}")
    spec = EXPERIMENTS[args.experiment](n_grid=n_grid, trials=args.trials,
                                        base_seed=args.base_seed)
    algorithms = [(name, algorithm_preset(name)) for name in names]
    result = run_sweep(spec, algorithms, bound_iterations=args.bound_iterations,
                       workers=args.workers)
    slopes = report.write_bundle(result, args.out_dir)
    for name in result.algorithms:
        slope = slopes[name]
        shown = "n/a" if slope is None else f"{slope:.4f}"
        print(f"slope {name} {shown}")
    print(f"wrote {args.out_dir}/sweep.csv and 2 figures")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args, parser)
        if args.command == "run":
            return _cmd_run(args, parser)
        return _cmd_sweep(args, parser)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
