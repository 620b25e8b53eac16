"""Online resource allocation under chance constraints.

Library plus CLI: Gaussian cone reformulation and its linearization,
online primal-dual solvers with history and capacity corrections,
offline reference bounds, and a seeded synthetic experiment harness.
"""

from .core import (
    Instance,
    MUST_ASSIGN,
    OPTIONAL_REJECT,
    Request,
    Solution,
    SolverConfig,
    objective_of,
    validate,
)
from .solvers import run_solver

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "MUST_ASSIGN",
    "OPTIONAL_REJECT",
    "Request",
    "Solution",
    "SolverConfig",
    "objective_of",
    "run_solver",
    "validate",
    "__version__",
]
