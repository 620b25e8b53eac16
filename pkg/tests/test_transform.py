import math

import numpy as np
import pytest

from ccalloc import transform
from ccalloc.core import Instance, Request
from ccalloc.stats import std_normal_quantile

from conftest import random_instance, single_request_instance
from refimpl import linearized_lhs_by_loop, quantile_bisection, soc_lhs_by_loop


class TestGammaVector:
    def test_zeros(self):
        assert np.array_equal(transform.gamma_vector([0.0, 0.0, 0.0]), np.zeros(3))

    def test_componentwise_sqrt(self):
        assert np.array_equal(transform.gamma_vector([4.0, 9.0, 0.25]),
                              [2.0, 3.0, 0.5])

    def test_negative_raises(self):
        with pytest.raises(ValueError, match="negative variance"):
            transform.gamma_vector([1.0, -0.5])

    def test_single_selection_identity(self):
        # sqrt(x' diag(v) x) == gamma' x for every one-hot or zero x
        rng = np.random.default_rng(10)
        for _ in range(500):
            k = rng.integers(1, 6)
            v = rng.uniform(0, 5, size=k)
            gam = transform.gamma_vector(v)
            for l in range(k):
                x = np.zeros(k)
                x[l] = 1.0
                assert math.sqrt(x @ np.diag(v) @ x) == pytest.approx(
                    gam @ x, abs=1e-12)
            assert gam @ np.zeros(k) == 0.0


def one_request(mean, var, k=3, m=2):
    return Request(np.ones(k), np.asarray(mean, float), np.asarray(var, float))


class TestLinearizedMatrix:
    def test_zero_variance_equals_mean(self):
        req = one_request(np.arange(6).reshape(2, 3), np.zeros((2, 3)))
        out = transform.linearized_matrix(req, [0.9, 0.8], 100)
        assert np.array_equal(out, req.mean_consumption)

    def test_unit_gamma_row(self):
        req = one_request(np.zeros((2, 3)), np.ones((2, 3)))
        out = transform.linearized_matrix(req, [0.95, 0.95], 4)
        expect = quantile_bisection(0.95) / 2.0
        assert out == pytest.approx(np.full((2, 3), expect), abs=1e-9)
        assert out[0, 0] == pytest.approx(0.8224, abs=1e-4)

    def test_quadrupling_horizon_halves_risk_part(self):
        rng = np.random.default_rng(11)
        req = one_request(rng.uniform(0, 4, (2, 3)), rng.uniform(0, 1, (2, 3)))
        conf = [0.7, 0.9]
        base = transform.linearized_matrix(req, conf, 25) - req.mean_consumption
        quartered = transform.linearized_matrix(req, conf, 100) - req.mean_consumption
        assert quartered == pytest.approx(base / 2.0, abs=1e-14)

    def test_dominates_mean_row(self):
        rng = np.random.default_rng(12)
        req = one_request(rng.uniform(0, 4, (2, 3)), rng.uniform(0, 1, (2, 3)))
        out = transform.linearized_matrix(req, [0.55, 0.99], 10)
        assert np.all(out >= req.mean_consumption)

    def test_bad_confidence_rejected(self):
        req = one_request(np.zeros((2, 3)), np.zeros((2, 3)))
        with pytest.raises(ValueError):
            transform.linearized_matrix(req, [0.5, 0.9], 10)
        with pytest.raises(ValueError):
            transform.linearized_matrix(req, [0.9, 1.0], 10)


class TestCorrectedMatrix:
    def test_unit_beta_equals_linearized(self):
        rng = np.random.default_rng(13)
        req = one_request(rng.uniform(0, 4, (2, 3)), rng.uniform(0, 1, (2, 3)))
        conf = [0.65, 0.95]
        assert np.array_equal(transform.corrected_matrix(req, conf, 9, np.ones(2)),
                              transform.linearized_matrix(req, conf, 9))

    def test_beta_two_doubles_risk_part(self):
        rng = np.random.default_rng(14)
        req = one_request(rng.uniform(0, 4, (2, 3)), rng.uniform(0, 1, (2, 3)))
        conf = [0.65, 0.95]
        lin = transform.linearized_matrix(req, conf, 9)
        cor = transform.corrected_matrix(req, conf, 9, np.array([2.0, 1.0]))
        assert cor[0] == pytest.approx(2 * lin[0] - req.mean_consumption[0], abs=1e-14)
        assert np.array_equal(cor[1], lin[1])

    def test_dominates_linearized_for_beta_above_one(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            req = one_request(rng.uniform(0, 4, (2, 3)), rng.uniform(0, 1, (2, 3)))
            beta = rng.uniform(1, 3, size=2)
            cor = transform.corrected_matrix(req, [0.7, 0.9], 16, beta)
            lin = transform.linearized_matrix(req, [0.7, 0.9], 16)
            assert np.all(cor >= lin - 1e-15)


class TestSocLhs:
    def test_all_reject_zero(self):
        rng = np.random.default_rng(16)
        inst = random_instance(rng, n=5)
        assert np.array_equal(transform.soc_lhs(inst, np.zeros(5, dtype=int)),
                              np.zeros(2))

    def test_single_acceptance(self):
        inst = single_request_instance(
            revenue=[1.0, 2.0],
            mean=[[1.0, 3.0], [2.0, 0.5]],
            var=[[4.0, 1.0], [0.25, 9.0]],
            capacities=[100.0, 100.0],
            confidence=[0.9, 0.75],
        )
        g = transform.soc_lhs(inst, [2])
        q90 = std_normal_quantile(0.9)
        q75 = std_normal_quantile(0.75)
        assert g == pytest.approx([3.0 + q90 * 1.0, 0.5 + q75 * 3.0], abs=1e-12)

    def test_matches_reversed_accumulation(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            inst = random_instance(rng, n=8, m=3, k=2)
            dec = rng.integers(0, 3, size=8)
            q = [std_normal_quantile(e) for e in inst.confidence]
            assert transform.soc_lhs(inst, dec) == pytest.approx(
                soc_lhs_by_loop(inst, dec, q), abs=1e-10)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(18)
        inst = random_instance(rng, n=5)
        with pytest.raises(ValueError, match="dimension mismatch"):
            transform.soc_lhs(inst, [0, 0])

    def test_monotone_in_acceptances(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            inst = random_instance(rng, n=8, m=2, k=2)
            dec = rng.integers(0, 3, size=8)
            rejected = np.flatnonzero(dec == 0)
            if len(rejected) == 0:
                continue
            g = transform.soc_lhs(inst, dec)
            more = dec.copy()
            more[rejected[0]] = 1
            assert np.all(transform.soc_lhs(inst, more) >= g - 1e-12)


class TestLinearizedLhs:
    def test_all_reject_zero(self):
        rng = np.random.default_rng(20)
        inst = random_instance(rng, n=5)
        assert np.array_equal(transform.linearized_lhs(inst, np.zeros(5, dtype=int)),
                              np.zeros(2))

    def test_zero_variance_equals_soc(self):
        reqs = tuple(
            Request(np.ones(2), np.full((2, 2), float(t + 1)), np.zeros((2, 2)))
            for t in range(4)
        )
        inst = Instance(4, 2, 2, np.full(2, 100.0), np.array([0.8, 0.9]), reqs)
        dec = [1, 0, 2, 1]
        assert np.array_equal(transform.linearized_lhs(inst, dec),
                              transform.soc_lhs(inst, dec))

    def test_matches_independent_loop(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            inst = random_instance(rng, n=7, m=2, k=3)
            dec = rng.integers(0, 4, size=7)
            q = [std_normal_quantile(e) for e in inst.confidence]
            assert transform.linearized_lhs(inst, dec) == pytest.approx(
                linearized_lhs_by_loop(inst, dec, q), abs=1e-10)

    def test_never_exceeds_soc_lhs(self):
        # relaxation direction: the decoupled rows under-count risk
        rng = np.random.default_rng(22)
        for _ in range(500):
            n = int(rng.integers(1, 10))
            inst = random_instance(rng, n=n, m=2, k=2)
            dec = rng.integers(0, 3, size=n)
            lin = transform.linearized_lhs(inst, dec)
            soc = transform.soc_lhs(inst, dec)
            assert np.all(lin <= soc + 1e-12)
