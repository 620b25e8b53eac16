import logging

import numpy as np
import pytest

from ccalloc.core import (
    Instance,
    MUST_ASSIGN,
    Request,
    SolverConfig,
    objective_of,
    request_from_full_covariance,
    validate,
)
from ccalloc.experiments import ExperimentSpec, generate_instance

from conftest import random_instance
from refimpl import objective_by_loop


def exp1_instance(n=10, seed=3):
    return generate_instance(ExperimentSpec.experiment_one(), n, seed)


class TestValidate:
    def test_well_formed_is_clean(self):
        assert validate(exp1_instance()) == []

    def test_confidence_at_half_rejected(self):
        inst = exp1_instance()
        bad = Instance(inst.n, inst.m, inst.k, inst.capacities,
                       np.array([0.5, 0.75, 0.85, 0.95]), inst.requests)
        problems = validate(bad)
        assert any("confidence must exceed 0.5" in p for p in problems)

    def test_confidence_at_one_rejected(self):
        inst = exp1_instance()
        bad = Instance(inst.n, inst.m, inst.k, inst.capacities,
                       np.array([0.65, 0.75, 0.85, 1.0]), inst.requests)
        assert any("below 1" in p for p in validate(bad))

    def test_negative_variance_reported(self):
        inst = exp1_instance(n=2)
        req = inst.requests[0]
        var = req.var_diag.copy()
        var[0, 0] = -1.0
        bad = Instance(inst.n, inst.m, inst.k, inst.capacities, inst.confidence,
                       (Request(req.revenue, req.mean_consumption, var),
                        inst.requests[1]))
        assert any("negative variance" in p for p in validate(bad))

    def test_nonpositive_capacity_reported(self):
        inst = exp1_instance()
        bad = Instance(inst.n, inst.m, inst.k, np.array([0.0, 1.0, 1.0, 1.0]),
                       inst.confidence, inst.requests)
        assert any("capacity must be positive" in p for p in validate(bad))

    def test_request_count_mismatch(self):
        inst = exp1_instance(n=4)
        bad = Instance(5, inst.m, inst.k, inst.capacities, inst.confidence,
                       inst.requests)
        assert any("expected 5 requests" in p for p in validate(bad))

    def test_shape_mismatch_reported(self):
        inst = exp1_instance(n=2)
        req = inst.requests[0]
        bad_req = Request(req.revenue[:3], req.mean_consumption, req.var_diag)
        bad = Instance(inst.n, inst.m, inst.k, inst.capacities, inst.confidence,
                       (bad_req, inst.requests[1]))
        assert any("revenue" in p for p in validate(bad))

    def test_all_problems_reported_at_once(self):
        inst = exp1_instance()
        bad = Instance(inst.n, inst.m, inst.k, np.array([-1.0, 1.0, 1.0, 1.0]),
                       np.array([0.4, 0.75, 0.85, 0.95]), inst.requests)
        problems = validate(bad)
        assert len(problems) >= 2


class TestObjectiveOf:
    def test_all_rejections_zero(self):
        inst = exp1_instance(n=6)
        assert objective_of(inst, np.zeros(6, dtype=int)) == 0.0

    def test_two_step_sum(self):
        reqs = tuple(
            Request(np.array([c]), np.zeros((1, 1)), np.zeros((1, 1)))
            for c in (1.0, 2.0)
        )
        inst = Instance(2, 1, 1, np.array([10.0]), np.array([0.9]), reqs)
        assert objective_of(inst, [1, 1]) == 3.0

    def test_matches_independent_loop(self):
        rng = np.random.default_rng(5)
        inst = random_instance(rng, n=8, k=2)
        for _ in range(20):
            dec = rng.integers(0, 3, size=8)
            assert objective_of(inst, dec) == pytest.approx(
                objective_by_loop(inst, dec), abs=1e-12)

    def test_permutation_covariant(self):
        rng = np.random.default_rng(6)
        inst = random_instance(rng, n=10, k=3)
        dec = rng.integers(0, 4, size=10)
        base = objective_of(inst, dec)
        for _ in range(10):
            perm = rng.permutation(10)
            permuted = Instance(inst.n, inst.m, inst.k, inst.capacities,
                                inst.confidence,
                                tuple(inst.requests[i] for i in perm))
            assert objective_of(permuted, dec[perm]) == pytest.approx(base, abs=1e-12)

    def test_dimension_mismatch_raises(self):
        inst = exp1_instance(n=4)
        with pytest.raises(ValueError, match="dimension mismatch"):
            objective_of(inst, [0, 0])

    def test_out_of_range_choice_raises(self):
        inst = exp1_instance(n=4)
        with pytest.raises(ValueError):
            objective_of(inst, [0, 0, 0, 9])


class TestTypes:
    def test_arrays_frozen(self):
        inst = exp1_instance(n=2)
        with pytest.raises(ValueError):
            inst.capacities[0] = 5.0
        with pytest.raises(ValueError):
            inst.requests[0].revenue[0] = 5.0

    def test_solver_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(step_size_scale=0.0)
        with pytest.raises(ValueError):
            SolverConfig(tie_break="coin-flip")

    def test_must_assign_mode_roundtrips(self):
        rng = np.random.default_rng(7)
        inst = random_instance(rng, mode=MUST_ASSIGN)
        assert inst.assignment_mode == MUST_ASSIGN

    def test_full_covariance_reduced_to_diagonal(self, caplog):
        cov = np.zeros((2, 2, 2))
        cov[0] = [[4.0, 0.5], [0.5, 9.0]]
        cov[1] = [[1.0, 0.0], [0.0, 0.25]]
        with caplog.at_level(logging.INFO, logger="ccalloc.core"):
            req = request_from_full_covariance(
                np.ones(2), np.ones((2, 2)), cov)
        assert np.array_equal(req.var_diag, [[4.0, 9.0], [1.0, 0.25]])
        assert any("diagonal" in rec.message for rec in caplog.records)

    def test_full_covariance_bad_shape(self):
        with pytest.raises(ValueError):
            request_from_full_covariance(np.ones(2), np.ones((2, 2)),
                                         np.ones((2, 2)))
