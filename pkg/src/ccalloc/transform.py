"""Model chain from chance constraints to online-solvable linear rows.

For Gaussian consumption the probabilistic capacity constraint is an
exact second-order cone constraint

    sum_t abar_tj' x_t  +  q_j * sqrt(sum_t x_t' K_tj x_t)  <=  b_j,

with q_j the normal quantile of the confidence level.  Because each x_t
selects at most one scheme, sqrt(x' diag(v) x) equals gamma' x with
gamma the componentwise square root of v, and the Cauchy-Schwarz bound
sum_t gamma' x_t <= sqrt(n * sum_t x_t' K x_t) yields decision-decoupled
per-step rows

    a_tilde_tj = abar_tj + q_j * gamma_tj / sqrt(n),

a relaxation of the cone constraint.  The corrected rows scale the risk
part by per-constraint factors beta >= 1 that tighten the bound using
realized history.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import Instance, Request, packed_arrays
from .stats import std_normal_quantile

__all__ = [
    "corrected_matrix",
    "spent_moments",
    "gamma_vector",
    "linearized_matrix",
    "linearized_lhs",
    "soc_lhs",
]


def gamma_vector(var_diag_row) -> np.ndarray:
    """Componentwise square root of a variance row (the per-scheme sigma)."""
    v = np.asarray(var_diag_row, dtype=float)
    if np.any(v < 0):
        raise ValueError("negative variance entry")
    return np.sqrt(v)


def quantiles_of(confidence) -> np.ndarray:
    """Normal quantile per confidence level, validated to (0.5, 1)."""
    eta = np.asarray(confidence, dtype=float)
    if np.any(eta <= 0.5) or np.any(eta >= 1.0):
        raise ValueError("confidence levels must lie in (0.5, 1)")
    return np.array([std_normal_quantile(e) for e in eta])


def corrected_matrix(request: Request, confidence, n: int, beta) -> np.ndarray:
    """Per-step coefficient rows with risk scaled by per-constraint beta.

    Row j is mean_consumption[j] + beta_j * q_j * gamma[j] / sqrt(n).
    With beta identically 1 this is the plain linearized matrix.
    """
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    q = quantiles_of(confidence)
    b = np.asarray(beta, dtype=float)
    gam = gamma_vector(request.var_diag)
    return request.mean_consumption + (b * q)[:, None] * gam / math.sqrt(n)


def linearized_matrix(request: Request, confidence, n: int) -> np.ndarray:
    """Decision-decoupled rows a_tilde for one request (beta = 1)."""
    m = len(np.asarray(confidence))
    return corrected_matrix(request, confidence, n, np.ones(m))


def spent_moments(instance: Instance, decisions) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulated (means, variances, gammas) per resource over accepted steps.

    The building block for every whole-trajectory evaluation: cone
    left-hand sides, deviation metrics, and the relaxed rows all read
    these three accumulators.
    """
    dec = np.asarray(decisions, dtype=np.int64)
    if dec.shape != (instance.n,):
        raise ValueError(f"dimension mismatch: expected {instance.n} decisions, got shape {dec.shape}")
    _, means, var = packed_arrays(instance)
    sel = dec > 0
    if not np.any(sel):
        z = np.zeros(instance.m)
        return z, z.copy(), z.copy()
    cols = dec[sel] - 1
    mean_rows = np.take_along_axis(means[sel], cols[:, None, None], axis=2)[:, :, 0]
    var_rows = np.take_along_axis(var[sel], cols[:, None, None], axis=2)[:, :, 0]
    return mean_rows.sum(axis=0), var_rows.sum(axis=0), np.sqrt(var_rows).sum(axis=0)


def soc_lhs(instance: Instance, decisions: Sequence[int]) -> np.ndarray:
    """Exact cone left-hand side g(x) per resource; zero when all rejected."""
    mean_sum, var_sum, _ = spent_moments(instance, decisions)
    q = quantiles_of(instance.confidence)
    return mean_sum + q * np.sqrt(var_sum)


def linearized_lhs(instance: Instance, decisions: Sequence[int]) -> np.ndarray:
    """Left-hand side of the relaxed rows; componentwise <= soc_lhs."""
    mean_sum, _, gamma_sum = spent_moments(instance, decisions)
    q = quantiles_of(instance.confidence)
    return mean_sum + q * gamma_sum / math.sqrt(instance.n)
