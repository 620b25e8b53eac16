"""Online primal-dual solvers: the plain method, the corrected one, ablations.

One pass over the horizon.  At each step the arriving request is scored
by reduced revenue against the current dual prices, the best scheme is
taken when its score is positive (always, in must-assign mode), and the
prices follow a projected subgradient step of size step_size_scale/sqrt(n).

Two optional corrections close the gap between the linearized rows and
the exact cone constraint:

  * scale factors beta_tj >= 1 computed from realized history, which
    re-inflate the per-step risk term toward the true accumulated
    standard deviation (Cauchy-Schwarz is tight only for equal terms);
  * a per-step recomputation of the capacity rate d_t from the budget
    that remains once spent means and the accumulated risk buffer are
    set aside.

Both corrections cost O(m) per step.  A run is strictly sequential in t;
distinct runs are independent and may be executed in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import transform
from .core import (
    OPTIONAL_REJECT,
    TIE_BREAK_RANDOM,
    Instance,
    InvalidInstanceError,
    Solution,
    SolverConfig,
    packed_arrays,
    validate,
)
from .stats import make_rng

__all__ = [
    "DualState",
    "adjusted_capacity",
    "beta_factors",
    "corrected_matrix",
    "opd_price_update",
    "opd_select",
    "run_solver",
]

# Computed scale factors are >= 1 mathematically; allow only float rounding.
_BETA_FLOOR_TOL = 1e-12

corrected_matrix = transform.corrected_matrix


@dataclass
class DualState:
    """Mutable per-run bookkeeping: prices plus consumption accumulators.

    mean_spent, var_spent, gamma_spent are sums over accepted steps of the
    chosen column's mean, variance, and standard deviation per resource.
    Single-owner: one solver run mutates one state.
    """

    prices: np.ndarray
    step_index: int = 0
    mean_spent: np.ndarray = None
    var_spent: np.ndarray = None
    gamma_spent: np.ndarray = None
    adjusted_capacity: np.ndarray = None

    def __post_init__(self):
        m = len(self.prices)
        if self.mean_spent is None:
            self.mean_spent = np.zeros(m)
        if self.var_spent is None:
            self.var_spent = np.zeros(m)
        if self.gamma_spent is None:
            self.gamma_spent = np.zeros(m)

    def accept(self, mean_col: np.ndarray, var_col: np.ndarray) -> None:
        self.mean_spent = self.mean_spent + mean_col
        self.var_spent = self.var_spent + var_col
        self.gamma_spent = self.gamma_spent + np.sqrt(var_col)


def opd_select(prices, revenue, rows, mode=OPTIONAL_REJECT,
               tie_break=TIE_BREAK_RANDOM, rng=None):
    """Score schemes by reduced revenue and choose.

    Returns (choice, score): choice in {0..k} with 0 = reject, score the
    best reduced revenue v = max_l (c - p'A)_l.  Optional-reject mode
    accepts only when v > 0; must-assign mode always takes the argmax.
    Ties (exact float equality) go to a uniform draw from the argmax set,
    or to the lowest index under the deterministic tie rule.
    """
    p = np.asarray(prices, dtype=float)
    reduced = np.asarray(revenue, dtype=float) - p @ np.asarray(rows, dtype=float)
    v = float(reduced.max())
    if mode == OPTIONAL_REJECT and not v > 0.0:
        return 0, v
    ties = np.flatnonzero(reduced == v)
    if len(ties) > 1 and tie_break == TIE_BREAK_RANDOM:
        if rng is None:
            raise ValueError("random tie-breaking needs an rng")
        l = int(ties[rng.integers(len(ties))])
    else:
        l = int(ties[0])
    return l + 1, v


def opd_price_update(prices, chosen_row_values, capacity_rate, n, scale=1.0):
    """Projected subgradient step: max{p + scale/sqrt(n) (Ax - d), 0}."""
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    step = scale / math.sqrt(n)
    return np.maximum(
        np.asarray(prices, float) + step * (np.asarray(chosen_row_values, float)
                                            - np.asarray(capacity_rate, float)),
        0.0,
    )


def beta_factors(state: DualState, t: int) -> np.ndarray:
    """History scale factors for step t; state holds decisions 1..t-1.

    beta_tj = sqrt(t-1) * sqrt(sum var spent) / (sum gamma spent), or 1
    when t = 1 or nothing with positive variance was accepted yet.
    Cauchy-Schwarz over the t-1 history terms gives beta >= 1 always.
    """
    m = len(state.prices)
    if t <= 1:
        return np.ones(m)
    live = state.gamma_spent > 0.0
    beta = np.ones(m)
    beta[live] = (math.sqrt(t - 1) * np.sqrt(state.var_spent[live])
                  / state.gamma_spent[live])
    return beta


def adjusted_capacity(state: DualState, t: int, instance: Instance) -> np.ndarray:
    """Remaining per-round budget after step t (accumulators through t).

    d_tj = (b_j - q_j sqrt((t/n) sum var spent) - sum mean spent) / (n - t).
    Negative components are legitimate: they accelerate price growth after
    overspending.  Undefined at t = n (the final price update is skipped).
    """
    n = instance.n
    if not 1 <= t <= n - 1:
        raise ValueError(f"adjusted capacity needs 1 <= t <= n-1, got t={t}, n={n}")
    q = transform.quantiles_of(instance.confidence)
    risk = q * np.sqrt((t / n) * state.var_spent)
    return (instance.capacities - risk - state.mean_spent) / (n - t)


def run_solver(instance: Instance, config: SolverConfig) -> Solution:
    """One online pass; deterministic given (instance, config).

    Both correction flags off reproduces the plain primal-dual method with
    constant capacity rate b/n; both on is the fully corrected variant.
    """
    problems = validate(instance)
    if problems:
        raise InvalidInstanceError(problems)

    n, m, k = instance.n, instance.m, instance.k
    mode = instance.assignment_mode
    rng = make_rng(config.rng_seed)
    q = transform.quantiles_of(instance.confidence)
    revenue, means, var = packed_arrays(instance)
    gammas = np.sqrt(var)
    sqrt_n = math.sqrt(n)
    d_const = instance.capacities / n

    state = DualState(prices=np.zeros(m))
    decisions = np.zeros(n, dtype=np.int64)
    price_hist = np.zeros((n, m))
    beta_hist = np.ones((n, m))
    objective = 0.0

    for t in range(1, n + 1):
        i = t - 1
        state.step_index = t
        if config.use_beta_correction:
            beta = beta_factors(state, t)
            if np.any(beta < 1.0 - _BETA_FLOOR_TOL):
                raise AssertionError(f"scale factor below 1 at step {t}: {beta}")
        else:
            beta = np.ones(m)
        rows = means[i] + (beta * q)[:, None] * gammas[i] / sqrt_n

        choice, _ = opd_select(state.prices, revenue[i], rows, mode,
                               config.tie_break, rng)
        decisions[i] = choice
        price_hist[i] = state.prices
        beta_hist[i] = beta

        if choice > 0:
            col = choice - 1
            objective += float(revenue[i, col])
            state.accept(means[i][:, col], var[i][:, col])
            consumed = rows[:, col]
        else:
            consumed = np.zeros(m)

        # The price after the final step is never consulted, so the update
        # (whose corrected capacity rate divides by n - t) is skipped there.
        if t < n:
            if config.use_capacity_correction:
                d_t = adjusted_capacity(state, t, instance)
            else:
                d_t = d_const
            state.adjusted_capacity = d_t
            state.prices = opd_price_update(state.prices, consumed, d_t, n,
                                            config.step_size_scale)

    soc = transform.soc_lhs(instance, decisions)
    return Solution(
        decisions=decisions,
        objective=objective,
        per_constraint_soc_lhs=soc,
        price_trajectory=price_hist,
        beta_trajectory=beta_hist,
    )
