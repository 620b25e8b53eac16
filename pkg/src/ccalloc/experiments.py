"""Synthetic experiment harness: instance generators, sweeps, slope fits.

Two standard synthetic models are built in.  Experiment I (bounded
inputs) draws revenues from U[0,1], consumption means from U[0,4] and
consumption variances as squared U[0,1]; Experiment II (unbounded
inputs) draws them from chi-square families: revenue chi2(3), means
(2/3)chi2(4), variances ((2/3)chi2(2))^2.  Both use k = 5 schemes,
m = 4 resources, confidence levels (0.65, 0.75, 0.85, 0.95) and a unit
per-round capacity rate, so b = n.

Seed discipline: trial_seed = mix_seed(base_seed, n, trial_index); the
instance, the dual-bound tie seed and each algorithm's solver seed are
derived from it, so any single trial is re-runnable in isolation.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import oracle
from .core import Instance, MUST_ASSIGN, OPTIONAL_REJECT, Request, SolverConfig
from .solvers import run_solver
from .stats import DistSpec, make_rng, mix_seed, sample

__all__ = [
    "ALGORITHM_PRESETS",
    "ExperimentSpec",
    "SweepResult",
    "TrialRecord",
    "algorithm_preset",
    "fit_sqrt_law",
    "generate_instance",
    "run_sweep",
]

log = logging.getLogger(__name__)

DEFAULT_N_GRID = (100, 200, 400, 800, 1600, 3200)
WORKERS_ENV_VAR = "CCALLOC_WORKERS"

# Algorithm presets: plain primal-dual, fully corrected, and the two
# single-correction ablations.
ALGORITHM_PRESETS = {
    "opd": dict(use_beta_correction=False, use_capacity_correction=False),
    "mopd": dict(use_beta_correction=True, use_capacity_correction=True),
    "mopd-nobeta": dict(use_beta_correction=False, use_capacity_correction=True),
    "mopd-nocap": dict(use_beta_correction=True, use_capacity_correction=False),
}


def algorithm_preset(name: str, **overrides) -> SolverConfig:
    if name not in ALGORITHM_PRESETS:
        raise ValueError(f"unknown algorithm preset {name!r}; "
                         f"choose from {sorted(ALGORITHM_PRESETS)}")
    return SolverConfig(**{**ALGORITHM_PRESETS[name], **overrides})


@dataclass(frozen=True)
class ExperimentSpec:
    """Shape of one synthetic experiment family."""

    name: str
    k: int
    m: int
    confidence: tuple
    capacity_rate: tuple
    revenue_dist: DistSpec
    mean_dist: DistSpec
    variance_dist: DistSpec
    n_grid: tuple = DEFAULT_N_GRID
    trials: int = 20
    base_seed: int = 20240901
    assignment_mode: str = OPTIONAL_REJECT

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError(f"n_grid must be strictly increasing, got {self.n_grid}")

    @classmethod
    def experiment_one(cls, **overrides) -> "ExperimentSpec":
        base = dict(
            name="I", k=5, m=4,
            confidence=(0.65, 0.75, 0.85, 0.95),
            capacity_rate=(1.0, 1.0, 1.0, 1.0),
            revenue_dist=DistSpec.uniform(0.0, 1.0),
            mean_dist=DistSpec.uniform(0.0, 4.0),
            variance_dist=DistSpec.squared_uniform(0.0, 1.0),
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def experiment_two(cls, **overrides) -> "ExperimentSpec":
        base = dict(
            name="II", k=5, m=4,
            confidence=(0.65, 0.75, 0.85, 0.95),
            capacity_rate=(1.0, 1.0, 1.0, 1.0),
            revenue_dist=DistSpec.chi_square(3),
            mean_dist=DistSpec.scaled_chi_square(2.0 / 3.0, 4),
            variance_dist=DistSpec.squared_scaled_chi_square(2.0 / 3.0, 2),
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def real_shaped(cls, **overrides) -> "ExperimentSpec":
        """Synthetic stand-in for the order-routing application:3 channels,
        one average-transit-time budget of 15 units per order, 90%
        confidence, and every order must be assigned somewhere."""
        base = dict(
            name="real-shaped", k=3, m=1,
            confidence=(0.9,),
            capacity_rate=(15.0,),
            revenue_dist=DistSpec.uniform(0.0, 1.0),
            mean_dist=DistSpec.uniform(8.0, 20.0),
            variance_dist=DistSpec.squared_uniform(0.0, 2.0),
            assignment_mode=MUST_ASSIGN,
        )
        base.update(overrides)
        return cls(**base)


def generate_instance(spec: ExperimentSpec, n: int, trial_seed: int) -> Instance:
    """Sample one instance; deterministic given trial_seed.

    Draw order is fixed and documented: all revenues (n, k), then all
    consumption means (n, m, k), then all variances (n, m, k).
    """
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    rng = make_rng(trial_seed)
    revenue = sample(spec.revenue_dist, rng, (n, spec.k))
    means = sample(spec.mean_dist, rng, (n, spec.m, spec.k))
    variances = sample(spec.variance_dist, rng, (n, spec.m, spec.k))
    requests = tuple(
        Request(revenue[t], means[t], variances[t]) for t in range(n)
    )
    return Instance(
        n=n, m=spec.m, k=spec.k,
        capacities=n * np.asarray(spec.capacity_rate, dtype=float),
        confidence=np.asarray(spec.confidence, dtype=float),
        requests=requests,
        assignment_mode=spec.assignment_mode,
    )


@dataclass(frozen=True)
class TrialRecord:
    """Metrics of one (horizon, trial, algorithm) run."""

    experiment: str
    n: int
    algorithm: str
    trial: int
    objective: float
    upper_bound: float
    optimality_gap: float
    violation_norm: float
    prob_deviation_mean: float
    prob_deviation_per_constraint: tuple
    competitive_ratio: float
    wall_clock: float


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float


@dataclass
class SweepResult:
    """Per-trial records plus aggregates recomputable from them.

    summaries maps (n, algorithm) to {metric: MetricSummary}; the
    per-constraint deviations appear as prob_deviation_c1..cm.
    """

    spec: ExperimentSpec
    algorithms: tuple
    records: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)

    SCALAR_METRICS = ("optimality_gap", "violation_norm", "prob_deviation_mean",
                      "competitive_ratio", "wall_clock")

    def metric_names(self, include_timing: bool = True) -> list[str]:
        scalars = [m for m in self.SCALAR_METRICS
                   if include_timing or m != "wall_clock"]
        per_c = [f"prob_deviation_c{j + 1}" for j in range(self.spec.m)]
        return scalars + per_c

    def mean_series(self, algorithm: str, metric: str) -> list[tuple[int, float]]:
        return [(n, self.summaries[(n, algorithm)][metric].mean)
                for n in self.spec.n_grid]


def _aggregate(result: SweepResult) -> None:
    result.summaries.clear()
    for n in result.spec.n_grid:
        for name in result.algorithms:
            rows = [r for r in result.records if r.n == n and r.algorithm == name]
            if not rows:
                continue
            entry = {}
            for metric in SweepResult.SCALAR_METRICS:
                vals = np.array([getattr(r, metric) for r in rows])
                entry[metric] = MetricSummary(float(vals.mean()), float(vals.std()))
            per_c = np.array([r.prob_deviation_per_constraint for r in rows])
            for j in range(result.spec.m):
                entry[f"prob_deviation_c{j + 1}"] = MetricSummary(
                    float(per_c[:, j].mean()), float(per_c[:, j].std()))
            result.summaries[(n, name)] = entry


def _run_trial(spec: ExperimentSpec, n: int, trial: int, algorithms,
               bound_iterations: int, bound_method: str) -> list[TrialRecord]:
    trial_seed = mix_seed(spec.base_seed, n, trial)
    instance = generate_instance(spec, n, trial_seed)
    if bound_method == "brute":
        bound, _ = oracle.brute_force_offline(instance)
    else:
        bound = oracle.dual_upper_bound(instance, bound_iterations,
                                        seed=mix_seed(trial_seed, 1))
    records = []
    for idx, (name, config) in enumerate(algorithms):
        run_config = replace(config, rng_seed=mix_seed(trial_seed, 2, idx))
        start = time.perf_counter()
        solution = run_solver(instance, run_config)
        elapsed = time.perf_counter() - start
        report = oracle.compute_metrics(instance, solution.objective,
                                        solution.decisions, bound)
        records.append(TrialRecord(
            experiment=spec.name, n=n, algorithm=name, trial=trial,
            objective=report.objective, upper_bound=report.upper_bound,
            optimality_gap=report.optimality_gap,
            violation_norm=report.violation_norm,
            prob_deviation_mean=report.prob_deviation_mean,
            prob_deviation_per_constraint=tuple(report.prob_deviation_per_constraint),
            competitive_ratio=report.competitive_ratio,
            wall_clock=elapsed,
        ))
    return records


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(spec: ExperimentSpec, algorithms, bound_iterations: int = 2000,
              bound_method: str = "dual", workers: int | None = None) -> SweepResult:
    """Run every (n, trial, algorithm) combination and aggregate.

    algorithms is a sequence of (name, SolverConfig) pairs; one upper
    bound is computed per instance and shared across algorithms, so their
    gaps are directly comparable.  Trials are independent jobs; workers
    > 1 runs them on a process pool with deterministic recombination.
    """
    if bound_method not in ("dual", "brute"):
        raise ValueError(f"bound_method must be 'dual' or 'brute', got {bound_method!r}")
    algorithms = [(str(name), cfg) for name, cfg in algorithms]
    if workers is None:
        workers = default_workers()
    jobs = [(spec, n, trial, algorithms, bound_iterations, bound_method)
            for n in spec.n_grid for trial in range(spec.trials)]
    result = SweepResult(spec=spec, algorithms=tuple(name for name, _ in algorithms))
    if workers <= 1 or len(jobs) <= 1:
        batches = [_run_trial(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_trial, *zip(*jobs), chunksize=1))
    for batch in batches:  # job list order is (n, trial) ascending already
        result.records.extend(batch)
    _aggregate(result)
    return result


def fit_sqrt_law(points) -> tuple[float, float]:
    """Least-squares slope/intercept of log(gap) against log(n).

    Nonpositive gaps cannot be log-fitted; they are dropped with a logged
    note.  Fewer than 3 surviving points is an error.
    """
    kept = [(n, g) for n, g in points if g > 0.0]
    dropped = len(list(points)) - len(kept)
    if dropped:
        log.warning("fit_sqrt_law dropped %d nonpositive gap point(s)", dropped)
    if len(kept) < 3:
        raise ValueError(f"need at least 3 positive points to fit, have {len(kept)}")
    x = np.log([n for n, _ in kept])
    y = np.log([g for _, g in kept])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)
