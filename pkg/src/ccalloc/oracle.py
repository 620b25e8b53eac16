"""Offline references and solution metrics.

Two references are provided for the online solvers to be measured
against: exhaustive enumeration of every decision sequence (exact, but
only viable for tiny horizons) and a Lagrangian dual bound of the
linearized relaxation (any nonnegative price vector gives a valid upper
bound by weak duality, because the relaxation's feasible set contains
the cone-constrained one).  The dual bound is tightened by projected
subgradient descent; the schedule affects only tightness, never
validity, since the minimum over all visited evaluations is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import transform
from .core import Instance, MUST_ASSIGN, OPTIONAL_REJECT, packed_arrays
from .stats import make_rng, std_normal_cdf

__all__ = [
    "BruteForceSizeError",
    "MetricsReport",
    "brute_force_offline",
    "compute_metrics",
    "dual_upper_bound",
    "mc_chance_check",
    "probability_deviation",
    "violation_norm",
]

BRUTE_FORCE_GUARD = 10_000_000


class BruteForceSizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


class InfeasibleInstanceError(ValueError):
    """Must-assign instance with no feasible assignment at all."""


@dataclass(frozen=True)
class MetricsReport:
    """Everything one run is judged by."""

    objective: float
    upper_bound: float
    optimality_gap: float
    violation_norm: float
    prob_deviation_mean: float
    prob_deviation_per_constraint: np.ndarray
    competitive_ratio: float


def brute_force_offline(instance: Instance) -> tuple[float, np.ndarray]:
    """Exact offline optimum of the cone-constrained problem by enumeration.

    Walks the mixed-radix tree of decision sequences depth-first, checking
    feasibility incrementally; when all means are nonnegative the cone
    left-hand side is monotone in acceptances and infeasible prefixes are
    pruned.  Guarded to (k+1)^n <= 10^7 sequences.
    """
    n, m, k = instance.n, instance.m, instance.k
    total = (k + 1) ** n
    if total > BRUTE_FORCE_GUARD:
        raise BruteForceSizeError(
            f"(k+1)^n = {total} exceeds the enumeration guard {BRUTE_FORCE_GUARD}")
    q = transform.quantiles_of(instance.confidence)
    revenue, means, var = packed_arrays(instance)
    b = instance.capacities
    must_assign = instance.assignment_mode == MUST_ASSIGN
    can_prune = bool(np.all(means >= 0.0)) and bool(np.all(q >= 0.0))
    choices = range(1, k + 1) if must_assign else range(0, k + 1)

    best_obj = -math.inf
    best_dec: np.ndarray | None = None
    dec = np.zeros(n, dtype=np.int64)

    def feasible(mean_sum, var_sum) -> bool:
        return bool(np.all(mean_sum + q * np.sqrt(var_sum) <= b))

    def walk(t: int, obj: float, mean_sum: np.ndarray, var_sum: np.ndarray) -> None:
        nonlocal best_obj, best_dec
        if can_prune and not feasible(mean_sum, var_sum):
            return
        if t == n:
            if (can_prune or feasible(mean_sum, var_sum)) and obj > best_obj:
                best_obj = obj
                best_dec = dec.copy()
            return
        for choice in choices:
            dec[t] = choice
            if choice == 0:
                walk(t + 1, obj, mean_sum, var_sum)
            else:
                col = choice - 1
                walk(t + 1, obj + float(revenue[t, col]),
                     mean_sum + means[t][:, col], var_sum + var[t][:, col])
        dec[t] = 0

    walk(0, 0.0, np.zeros(m), np.zeros(m))
    if best_dec is None:
        raise InfeasibleInstanceError("no feasible assignment exists in must-assign mode")
    return best_obj, best_dec


def _linearized_stack(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    revenue, means, var = packed_arrays(instance)
    q = transform.quantiles_of(instance.confidence)
    rows = means + q[None, :, None] * np.sqrt(var) / math.sqrt(instance.n)
    return revenue, rows


def dual_upper_bound(instance: Instance, iterations: int = 2000, seed: int = 0) -> float:
    """Valid upper bound on the cone-constrained optimum, from any p >= 0.

    D(p) = sum_t max(0, max_l (c_t - p'A_t)_l) + p'b over the linearized
    rows (must-assign drops the outer positive part).  Projected
    subgradient descent from p = 0 with steps D(0)/(||b|| sqrt(s)) on the
    per-step-normalized subgradient; the minimum D over every evaluated
    point, including periodic running averages, is returned.  The seed
    only randomizes tie-breaking among equally good schemes.
    """
    n = instance.n
    revenue, rows = _linearized_stack(instance)
    b = np.asarray(instance.capacities, dtype=float)
    optional = instance.assignment_mode == OPTIONAL_REJECT
    rng = make_rng(seed)

    def evaluate(p: np.ndarray) -> tuple[float, np.ndarray]:
        reduced = revenue - np.einsum("j,tjl->tl", p, rows)
        v = reduced.max(axis=1)
        idx = reduced.argmax(axis=1)
        tie_rows = np.flatnonzero((reduced == v[:, None]).sum(axis=1) > 1)
        for t in tie_rows:
            cand = np.flatnonzero(reduced[t] == v[t])
            idx[t] = cand[rng.integers(len(cand))]
        picked = np.take_along_axis(rows, idx[:, None, None], axis=2)[:, :, 0]
        if optional:
            active = v > 0.0
            value = float(v[active].sum() + p @ b)
            consumed = picked[active].sum(axis=0)
        else:
            value = float(v.sum() + p @ b)
            consumed = picked.sum(axis=0)
        return value, consumed

    p = np.zeros(instance.m)
    d0, consumed = evaluate(p)
    if optional and d0 == 0.0:
        return 0.0  # nothing pays at p = 0; D >= 0 everywhere, so this is tight
    best = d0
    norm_b = float(np.linalg.norm(b))
    step0 = (abs(d0) if d0 != 0.0 else 1.0) / (norm_b if norm_b > 0 else max(n, 1))
    p_sum = p.copy()
    for s in range(1, iterations + 1):
        # normalized subgradient (b - consumption)/n keeps steps on the
        # O(1) dual price scale regardless of horizon length
        g = (b - consumed) / n
        p = np.maximum(p - (step0 / math.sqrt(s)) * g, 0.0)
        value, consumed = evaluate(p)
        best = min(best, value)
        p_sum += p
        if s % 25 == 0:
            avg_value, _ = evaluate(p_sum / (s + 1))
            best = min(best, avg_value)
    return best


def violation_norm(instance: Instance, decisions) -> float:
    """Euclidean norm of the positive part of g(x) - b."""
    excess = transform.soc_lhs(instance, decisions) - instance.capacities
    return float(np.linalg.norm(np.maximum(excess, 0.0)))


def probability_deviation(instance: Instance, decisions) -> tuple[float, np.ndarray]:
    """Per-constraint shortfall of achieved confidence below the target.

    For resource j the achieved satisfaction probability of the decisions
    is Phi((b_j - spent mean) / sqrt(spent variance)); the deviation is
    its shortfall below eta_j, clamped at 0.  With zero spent variance the
    consumption is a point mass: deviation 0 when within capacity, the
    full eta_j otherwise.  Returns (mean over resources, per-resource).
    """
    mean_sum, var_sum, _ = transform.spent_moments(instance, decisions)
    eta = np.asarray(instance.confidence, dtype=float)
    b = np.asarray(instance.capacities, dtype=float)
    dev = np.zeros(instance.m)
    for j in range(instance.m):
        if var_sum[j] == 0.0:
            dev[j] = 0.0 if mean_sum[j] <= b[j] else eta[j]
        else:
            achieved = std_normal_cdf((b[j] - mean_sum[j]) / math.sqrt(var_sum[j]))
            dev[j] = max(eta[j] - achieved, 0.0)
    return float(dev.mean()), dev


def mc_chance_check(instance: Instance, decisions, trials: int, seed: int) -> np.ndarray:
    """Empirical satisfaction probability per constraint by simulation.

    Draws each accepted entry's consumption independently from its Gaussian
    (mean, variance) and counts the trials whose totals fit the capacities.
    This goes back to the original probabilistic constraint, bypassing the
    cone reformulation entirely.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dec = np.asarray(decisions, dtype=np.int64)
    if dec.shape != (instance.n,):
        raise ValueError(f"dimension mismatch: expected {instance.n} decisions, got shape {dec.shape}")
    _, means, var = packed_arrays(instance)
    sel = dec > 0
    b = np.asarray(instance.capacities, dtype=float)
    if not np.any(sel):
        return np.ones(instance.m)
    cols = dec[sel] - 1
    mu = np.take_along_axis(means[sel], cols[:, None, None], axis=2)[:, :, 0]      # (T, m)
    sigma = np.sqrt(np.take_along_axis(var[sel], cols[:, None, None], axis=2))[:, :, 0]
    T = mu.shape[0]
    mu_total = mu.sum(axis=0)
    rng = make_rng(seed)
    hits = np.zeros(instance.m, dtype=np.int64)
    chunk = max(1, int(4_000_000 // max(1, T * instance.m)))
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        z = rng.standard_normal((size, T, instance.m))
        totals = mu_total + np.einsum("ctj,tj->cj", z, sigma)
        hits += (totals <= b).sum(axis=0)
        done += size
    return hits / trials


def compute_metrics(instance: Instance, objective: float, decisions,
                    upper_bound: float) -> MetricsReport:
    """Assemble the per-run report against a precomputed upper bound."""
    dev_mean, dev = probability_deviation(instance, decisions)
    if upper_bound != 0.0:
        ratio = objective / upper_bound
    else:
        ratio = 1.0 if objective == 0.0 else math.inf
    return MetricsReport(
        objective=objective,
        upper_bound=upper_bound,
        optimality_gap=upper_bound - objective,
        violation_norm=violation_norm(instance, decisions),
        prob_deviation_mean=dev_mean,
        prob_deviation_per_constraint=dev,
        competitive_ratio=ratio,
    )
