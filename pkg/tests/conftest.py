import sys
from pathlib import Path

import numpy as np

from ccalloc.core import Instance, OPTIONAL_REJECT, Request

sys.path.insert(0, str(Path(__file__).parent))


def random_instance(rng, n=8, m=2, k=2, mode=OPTIONAL_REJECT,
                    capacity_rate=1.0, confidence=None):
    """Small random instance with Experiment-I style coefficient ranges."""
    if confidence is None:
        confidence = rng.uniform(0.55, 0.98, size=m)
    requests = tuple(
        Request(
            revenue=rng.uniform(0, 1, size=k),
            mean_consumption=rng.uniform(0, 4, size=(m, k)),
            var_diag=rng.uniform(0, 1, size=(m, k)) ** 2,
        )
        for _ in range(n)
    )
    return Instance(
        n=n, m=m, k=k,
        capacities=np.full(m, n * capacity_rate, dtype=float),
        confidence=np.asarray(confidence, dtype=float),
        requests=requests,
        assignment_mode=mode,
    )


def single_request_instance(revenue, mean, var, capacities, confidence,
                            mode=OPTIONAL_REJECT):
    """n = 1 instance from plain lists; shapes (k,), (m,k), (m,k), (m,), (m,)."""
    return Instance(
        n=1,
        m=len(capacities),
        k=len(revenue),
        capacities=np.asarray(capacities, dtype=float),
        confidence=np.asarray(confidence, dtype=float),
        requests=(Request(np.asarray(revenue, float),
                          np.asarray(mean, float),
                          np.asarray(var, float)),),
        assignment_mode=mode,
    )
