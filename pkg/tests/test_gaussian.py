import math
from itertools import combinations

import numpy as np
import pytest

from mrfcd.errors import NotPositiveDefiniteError, ValidationError
from mrfcd.gaussian import (
    GaussianModel,
    delta_matrix,
    gamma_of,
    gaussian_log_density,
    gaussian_sample,
    pairwise_delta_det,
    single_edge_precision,
)


def random_pd(p, seed):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(p, p))
    return b @ b.T + p * np.eye(p)


class TestModel:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            GaussianModel(np.array([[1.0, 0.2], [0.1, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            GaussianModel(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(NotPositiveDefiniteError):
            GaussianModel(np.diag([1.0, 0.0]))

    def test_json_round_trip(self):
        m = GaussianModel(random_pd(3, 0))
        back = GaussianModel.from_json(m.to_json())
        assert np.array_equal(back.precision, m.precision)

    def test_immutable(self):
        m = GaussianModel(np.eye(2))
        with pytest.raises(ValueError):
            m.precision[0, 0] = 3.0


class TestDensity:
    def test_standard_at_origin(self):
        for p in (1, 3, 7):
            assert gaussian_log_density(GaussianModel(np.eye(p)), np.zeros(p)) == pytest.approx(-0.5 * p * math.log(2 * math.pi))

    def test_single_edge_at_origin(self):
        m = single_edge_precision(2, 0, 1, 0.3)
        assert gaussian_log_density(m, np.zeros(2)) == pytest.approx(0.5 * math.log(0.91) - math.log(2 * math.pi), abs=1e-14)

    def test_matches_covariance_form(self):
        a = random_pd(5, 3)
        cov = np.linalg.inv(a)
        x = np.random.default_rng(4).normal(size=5)
        expected = -0.5 * (5 * math.log(2 * math.pi) + math.log(np.linalg.det(cov)) + x @ np.linalg.solve(cov, x))
        assert abs(gaussian_log_density(GaussianModel(a), x) - expected) < 1e-9

    def test_batched(self):
        m = GaussianModel(random_pd(3, 1))
        x = np.random.default_rng(2).normal(size=(4, 3))
        out = gaussian_log_density(m, x)
        assert out.shape == (4,)
        assert out[2] == pytest.approx(gaussian_log_density(m, x[2]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            gaussian_log_density(GaussianModel(np.eye(3)), np.zeros(2))

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_integrates_to_one(self, p):
        # importance sampling from N(0, 4 I)
        m = GaussianModel(random_pd(p, 10 + p) / p)
        rng = np.random.default_rng(p)
        x = 2.0 * rng.normal(size=(100_000, p))
        log_prop = -0.5 * p * math.log(2 * math.pi * 4) - 0.125 * np.sum(x * x, axis=1)
        w = np.exp(gaussian_log_density(m, x) - log_prop)
        assert abs(w.mean() - 1) <= 3 * w.std(ddof=1) / math.sqrt(len(w))


class TestSampling:
    def test_identity_covariance(self):
        n = 100_000
        x = gaussian_sample(GaussianModel(np.eye(3)), n, 1).data
        cov = x.T @ x / n
        # Var of x_i x_j is 2 on the diagonal and 1 off it
        se = np.where(np.eye(3) == 1, math.sqrt(2 / n), math.sqrt(1 / n))
        assert np.all(np.abs(cov - np.eye(3)) < 4 * se)

    def test_single_edge_correlation(self):
        lam, n = 0.3, 100_000
        cov = np.linalg.inv(np.array([[1.0, lam], [lam, 1.0]]))
        rho = cov[0, 1] / cov[0, 0]
        assert rho == pytest.approx(-lam)
        x = gaussian_sample(single_edge_precision(2, 0, 1, lam), n, 5).data
        r = np.corrcoef(x.T)[0, 1]
        assert abs(r - rho) < 4 * (1 - rho**2) / math.sqrt(n)

    def test_deterministic(self):
        m = GaussianModel(random_pd(4, 2))
        a, b = gaussian_sample(m, 50, 9), gaussian_sample(m, 50, 9)
        assert a == b and a.kind == "real"


class TestGamma:
    def test_no_edges(self):
        assert gamma_of(GaussianModel(np.eye(4))) is None

    def test_single_edge(self):
        assert gamma_of(single_edge_precision(2, 0, 1, 0.3)) == pytest.approx(0.3)

    def test_minimum_over_edges(self):
        a = np.eye(3)
        a[0, 1] = a[1, 0] = 0.2
        a[1, 2] = a[2, 1] = -0.4
        assert gamma_of(GaussianModel(a)) == pytest.approx(0.2)

    def test_scale_invariant(self):
        a = np.array([[4.0, 0.6], [0.6, 1.0]])
        assert gamma_of(GaussianModel(a)) == pytest.approx(0.3)


class TestSingleEdgePrecision:
    def test_zero_is_identity(self):
        assert np.array_equal(single_edge_precision(4, 1, 3, 0.0).precision, np.eye(4))

    def test_near_singular(self):
        m = single_edge_precision(2, 0, 1, 0.99)
        assert np.linalg.det(m.precision) == pytest.approx(1 - 0.99**2)

    def test_singular_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            single_edge_precision(3, 0, 1, 1.0)


class TestDeltaDeterminants:
    def test_overlap_cases(self):
        assert pairwise_delta_det(5, (0, 1), (2, 3), 0.2) == pytest.approx(0.9216, abs=1e-15)
        assert pairwise_delta_det(5, (0, 1), (1, 3), 0.2) == pytest.approx(0.92, abs=1e-15)
        assert pairwise_delta_det(5, (0, 1), (0, 1), 0.2) == pytest.approx(0.84, abs=1e-15)

    @pytest.mark.parametrize("p", range(4, 9))
    @pytest.mark.parametrize("lam", [0.05, 0.1, 0.2, 0.35])
    def test_against_generic_determinant(self, p, lam):
        pairs = list(combinations(range(p), 2))
        for a in pairs:
            for b in pairs:
                m = np.eye(p) + delta_matrix(p, a, lam) + delta_matrix(p, b, lam)
                assert abs(pairwise_delta_det(p, a, b, lam) - np.linalg.det(m)) <= 1e-12

    def test_pd_violation(self):
        with pytest.raises(NotPositiveDefiniteError):
            pairwise_delta_det(4, (0, 1), (0, 1), 0.5)
        with pytest.raises(NotPositiveDefiniteError):
            pairwise_delta_det(4, (0, 1), (1, 2), 0.75)

    def test_invalid_pair(self):
        with pytest.raises(ValidationError):
            pairwise_delta_det(4, (0, 0), (1, 2), 0.1)


def test_log_det_gap_inequality():
    lam = np.arange(0, 391) / 1000
    assert np.all(np.log1p(-lam**2) - 0.5 * np.log1p(-4 * lam**2) <= 2 * lam**2)
