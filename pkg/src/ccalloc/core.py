"""Domain types for the online allocation problem.

An instance is a horizon of n requests against m capacitated resources.
Each request offers k consumption schemes; a decision is an integer in
{0, 1, ..., k} with 0 meaning "reject" (decisions are stored as plain
integer arrays, which makes the one-scheme-per-request rule unviolable
by construction).  Consumption of resource j under scheme l is random
with known mean and variance; only the variance diagonal is kept, since
a single chosen scheme never activates covariance cross terms.

All types are frozen and their arrays are made read-only, so instances
can be shared freely across worker processes and threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "MUST_ASSIGN",
    "OPTIONAL_REJECT",
    "Instance",
    "Request",
    "Solution",
    "SolverConfig",
    "InvalidInstanceError",
    "objective_of",
    "request_from_full_covariance",
    "validate",
]

log = logging.getLogger(__name__)

OPTIONAL_REJECT = "optional-reject"
MUST_ASSIGN = "must-assign"

TIE_BREAK_RANDOM = "random"
TIE_BREAK_LOWEST = "lowest"


class InvalidInstanceError(ValueError):
    """Raised by solvers when handed an instance that fails validation."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid instance: " + "; ".join(problems))
        self.problems = problems


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Request:
    """One arrival: revenue per scheme, and per-resource consumption moments.

    revenue          : (k,) revenue of each scheme
    mean_consumption : (m, k) expected consumption, row per resource
    var_diag         : (m, k) consumption variance, row per resource
    """

    revenue: np.ndarray
    mean_consumption: np.ndarray
    var_diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "revenue", _frozen(self.revenue))
        object.__setattr__(self, "mean_consumption", _frozen(self.mean_consumption))
        object.__setattr__(self, "var_diag", _frozen(self.var_diag))


def request_from_full_covariance(revenue, mean_consumption, covariances) -> Request:
    """Build a Request from full (m, k, k) covariance blocks.

    Off-diagonal covariance never influences a one-hot scheme choice, so
    the blocks are reduced to their diagonals; the reduction is logged.
    """
    cov = np.asarray(covariances, dtype=float)
    if cov.ndim != 3 or cov.shape[1] != cov.shape[2]:
        raise ValueError(f"expected (m, k, k) covariance blocks, got shape {cov.shape}")
    diag = np.einsum("jll->jl", cov)
    off = cov - np.stack([np.diag(d) for d in diag])
    if np.any(off != 0.0):
        log.info("full covariance input reduced to its diagonal "
                 "(off-diagonals cannot affect single-scheme decisions)")
    return Request(revenue, mean_consumption, diag.copy())


@dataclass(frozen=True)
class Instance:
    """A full problem: n requests, m resources, k schemes per request."""

    n: int
    m: int
    k: int
    capacities: np.ndarray
    confidence: np.ndarray
    requests: tuple[Request, ...]
    assignment_mode: str = OPTIONAL_REJECT

    def __post_init__(self):
        object.__setattr__(self, "capacities", _frozen(self.capacities))
        object.__setattr__(self, "confidence", _frozen(self.confidence))
        object.__setattr__(self, "requests", tuple(self.requests))


@dataclass(frozen=True)
class SolverConfig:
    """Switches for the online solver.

    The two correction flags select the algorithm variant: both off is the
    plain primal-dual method, both on is the fully corrected one, and the
    mixed settings are the two ablations.  step_size_scale multiplies the
    1/sqrt(n) dual step and exists for sensitivity studies only.
    """

    use_beta_correction: bool = False
    use_capacity_correction: bool = False
    step_size_scale: float = 1.0
    rng_seed: int = 0
    tie_break: str = TIE_BREAK_RANDOM

    def __post_init__(self):
        if self.step_size_scale <= 0:
            raise ValueError(f"step_size_scale must be positive, got {self.step_size_scale}")
        if self.tie_break not in (TIE_BREAK_RANDOM, TIE_BREAK_LOWEST):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")


@dataclass(frozen=True)
class Solution:
    """Trajectory of one solver run.

    decisions              : (n,) ints in {0..k}, 0 = reject
    objective              : realized revenue sum
    price_trajectory       : (n, m) dual price vector used at each step
    beta_trajectory        : (n, m) scale factors applied at each step
    per_constraint_soc_lhs : (m,) exact cone left-hand side of the decisions
    """

    decisions: np.ndarray
    objective: float
    per_constraint_soc_lhs: np.ndarray
    price_trajectory: Optional[np.ndarray] = None
    beta_trajectory: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "decisions", _frozen(self.decisions, dtype=np.int64))
        object.__setattr__(self, "per_constraint_soc_lhs", _frozen(self.per_constraint_soc_lhs))
        if self.price_trajectory is not None:
            object.__setattr__(self, "price_trajectory", _frozen(self.price_trajectory))
        if self.beta_trajectory is not None:
            object.__setattr__(self, "beta_trajectory", _frozen(self.beta_trajectory))


def validate(instance: Instance) -> list[str]:
    """Collect every invariant breach; an empty list means well-formed.

    Diagnostics are returned rather than raised so callers can report all
    problems at once (the CLI prints the full list).
    """
    problems: list[str] = []
    if instance.n < 1:
        problems.append(f"request count must be >= 1, got {instance.n}")
    if instance.m < 1:
        problems.append(f"resource count must be >= 1, got {instance.m}")
    if instance.k < 1:
        problems.append(f"scheme count must be >= 1, got {instance.k}")
    if instance.assignment_mode not in (OPTIONAL_REJECT, MUST_ASSIGN):
        problems.append(f"unknown assignment mode {instance.assignment_mode!r}")
    if instance.capacities.shape != (instance.m,):
        problems.append(f"capacities must have shape ({instance.m},), got {instance.capacities.shape}")
    else:
        for j, b in enumerate(instance.capacities):
            if not b > 0:
                problems.append(f"capacity must be positive (resource {j}: {b})")
    if instance.confidence.shape != (instance.m,):
        problems.append(f"confidence must have shape ({instance.m},), got {instance.confidence.shape}")
    else:
        for j, eta in enumerate(instance.confidence):
            if not eta > 0.5:
                problems.append(f"confidence must exceed 0.5 (resource {j}: {eta})")
            elif not eta < 1.0:
                problems.append(f"confidence must be below 1 (resource {j}: {eta})")
    if len(instance.requests) != instance.n:
        problems.append(f"expected {instance.n} requests, got {len(instance.requests)}")
    for t, req in enumerate(instance.requests):
        if req.revenue.shape != (instance.k,):
            problems.append(f"request {t}: revenue must have shape ({instance.k},)")
        if req.mean_consumption.shape != (instance.m, instance.k):
            problems.append(f"request {t}: mean_consumption must have shape ({instance.m}, {instance.k})")
        if req.var_diag.shape != (instance.m, instance.k):
            problems.append(f"request {t}: var_diag must have shape ({instance.m}, {instance.k})")
        elif np.any(req.var_diag < 0):
            problems.append(f"negative variance (request {t})")
        if not (np.all(np.isfinite(req.revenue))
                and np.all(np.isfinite(req.mean_consumption))
                and np.all(np.isfinite(req.var_diag))):
            problems.append(f"request {t}: non-finite coefficient")
    return problems


def objective_of(instance: Instance, decisions: Sequence[int]) -> float:
    """Total revenue of a decision sequence; rejected steps contribute 0."""
    dec = np.asarray(decisions, dtype=np.int64)
    if dec.shape != (instance.n,):
        raise ValueError(f"dimension mismatch: expected {instance.n} decisions, got shape {dec.shape}")
    if np.any(dec < 0) or np.any(dec > instance.k):
        raise ValueError("decision out of range")
    total = 0.0
    for req, choice in zip(instance.requests, dec):
        if choice > 0:
            total += float(req.revenue[choice - 1])
    return total


def packed_arrays(instance: Instance):
    """Stack the per-request data into (n,k), (n,m,k), (n,m,k) arrays.

    Hot paths (solvers, oracles) work on these instead of walking the
    request tuple.
    """
    revenue = np.stack([r.revenue for r in instance.requests])
    means = np.stack([r.mean_consumption for r in instance.requests])
    var = np.stack([r.var_diag for r in instance.requests])
    return revenue, means, var
