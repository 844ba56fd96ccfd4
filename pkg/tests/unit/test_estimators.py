"""Tests for covariance estimators, truncation and eigenvector diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matconc.lib.errors import EnumerationLimitError, GapDegeneracyError, MatrixError
from matconc.lib.estimators import (
    DirectionSet,
    TruncationParams,
    aligned_eigvec,
    default_tau,
    directional_truncated_form,
    empirical_kappa,
    partial_sum_norm,
    psi_trunc,
    rho_trunc,
    sample_covariance,
    sparse_sup_f,
    spread_peaky_eval,
    truncated_covariance,
    truncation_lambda,
)
from matconc.lib.matcore import SymMatrix
from matconc.lib.seeding import SeedSpec

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestTruncationFunctions:
    """psi and rho."""

    def test_scalar_values(self) -> None:
        assert psi_trunc(-3.0) == -1.0
        assert psi_trunc(0.25) == 0.25
        assert rho_trunc(0.4) == 0.0
        assert rho_trunc(0.75) == 0.5
        assert rho_trunc(5.0) == 1.0

    @given(arrays(np.float64, 16, elements=finite))
    def test_array_matches_scalar(self, x: np.ndarray) -> None:
        assert np.array_equal(psi_trunc(x), [psi_trunc(float(v)) for v in x])
        assert np.array_equal(rho_trunc(x), [rho_trunc(float(v)) for v in x])

    @given(finite)
    def test_psi_is_bounded_and_odd(self, x: float) -> None:
        assert -1.0 <= psi_trunc(x) <= 1.0
        assert psi_trunc(-x) == -psi_trunc(x)


class TestTruncationParameters:
    """lambda and tau."""

    def test_lambda(self) -> None:
        assert truncation_lambda(1.0, 2.0, 4.0, 100) == pytest.approx(0.1)
        assert truncation_lambda(2.0, 1.0, 1.0, 1) == pytest.approx(0.25)

    def test_lambda_rejects_nonpositive(self) -> None:
        with pytest.raises(ValueError):
            truncation_lambda(1.0, 0.0, 4.0, 100)

    def test_params_validation(self) -> None:
        with pytest.raises(ValueError):
            TruncationParams(lam=0.0)
        with pytest.raises(ValueError):
            TruncationParams(lam=0.1, kappa=0.5)
        assert TruncationParams(lam=0.1).tau == math.inf

    def test_default_tau(self) -> None:
        assert default_tau(4.0, 1.0, 100) == pytest.approx(20.0)


class TestCovarianceEstimators:
    """Sample and norm-truncated covariance."""

    x = np.array([[1.0, 0.0], [0.0, 2.0]])

    def test_sample_covariance(self) -> None:
        assert np.allclose(sample_covariance(self.x).entries, np.diag([0.5, 2.0]))

    def test_truncation_drops_long_vectors(self) -> None:
        assert np.allclose(truncated_covariance(self.x, 1.5).entries, np.diag([0.5, 0.0]))
        assert np.allclose(truncated_covariance(self.x, math.inf).entries, sample_covariance(self.x).entries)

    def test_zero_threshold_keeps_nothing(self) -> None:
        assert np.array_equal(truncated_covariance(self.x, 0.0).entries, np.zeros((2, 2)))

    def test_rejects_bad_input(self) -> None:
        with pytest.raises(MatrixError):
            sample_covariance(np.empty((0, 3)))
        with pytest.raises(ValueError):
            truncated_covariance(self.x, -1.0)

    def test_directional_form(self) -> None:
        x = np.array([[1.0, 0.0], [3.0, 0.0]])
        value = directional_truncated_form(x, np.array([1.0, 0.0]), 0.5)
        assert value.tolist() == pytest.approx([1.5])

    def test_directional_form_without_truncation(self, rng: np.random.Generator) -> None:
        x = rng.standard_normal((50, 3))
        v = np.array([0.0, 1.0, 0.0])
        lam = 1e-9
        assert directional_truncated_form(x, v, lam)[0] == pytest.approx(float(np.mean(x[:, 1] ** 2)))


class TestDirections:
    """Direction sets and the empirical kappa."""

    def test_build(self, seed: SeedSpec) -> None:
        dirs = DirectionSet.build(3, m=10, seed=seed, extra=[np.eye(3)])
        assert len(dirs) == 13
        assert np.allclose(np.linalg.norm(dirs.vectors, axis=1), 1.0)
        assert np.allclose(dirs.vectors[10:], np.eye(3))

    def test_deterministic(self, seed: SeedSpec) -> None:
        a = DirectionSet.build(4, m=8, seed=seed)
        b = DirectionSet.build(4, m=8, seed=seed)
        assert np.array_equal(a.vectors, b.vectors)

    def test_rejects_non_unit(self) -> None:
        with pytest.raises(ValueError):
            DirectionSet(vectors=np.array([[1.0, 1.0]]))

    def test_gaussian_kappa(self, rng: np.random.Generator, seed: SeedSpec) -> None:
        x = rng.standard_normal((50_000, 3))
        dirs = DirectionSet.build(3, m=32, seed=seed)
        assert empirical_kappa(x, dirs, 4.0) == pytest.approx(3.0**0.25, abs=0.05)

    def test_kappa_at_least_one(self, seed: SeedSpec) -> None:
        x = np.array([[1.0, 0.0], [-1.0, 0.0]])
        dirs = DirectionSet.build(2, m=4, seed=seed, extra=[np.eye(2)])
        assert empirical_kappa(x, dirs, 4.0) == pytest.approx(1.0)


class TestSpreadPeaky:
    """Per-direction split of the truncated quadratic form."""

    def test_values(self) -> None:
        x = np.array([[1.0, 0.0], [3.0, 0.0]])
        dirs = DirectionSet(vectors=np.eye(2))
        result = spread_peaky_eval(x, TruncationParams(lam=0.5), dirs, np.diag([5.0, 0.0]))
        assert result.spread.tolist() == pytest.approx([3.5, 0.0])
        assert result.peaky.tolist() == pytest.approx([4.5, 0.0])
        assert result.count.tolist() == [1, 0]
        assert result.error.tolist() == pytest.approx([0.0, 0.0])
        assert result.max_count == 1
        assert result.summary() == {"sup_spread": 3.5, "sup_peaky": 4.5, "sup_error": 0.0, "max_count": 1.0}

    def test_error_below_spread_plus_peaky(self, rng: np.random.Generator, seed: SeedSpec) -> None:
        # |form - target| <= |psi form - target| + peaky, direction by direction
        x = rng.standard_t(3.0, (200, 3))
        dirs = DirectionSet.build(3, m=64, seed=seed)
        result = spread_peaky_eval(x, TruncationParams(lam=0.2), dirs, np.eye(3))
        assert np.all(result.error <= result.spread + result.peaky + 1e-12)

    def test_peaky_below_sparse_supremum(self, rng: np.random.Generator, seed: SeedSpec) -> None:
        # sup_v peaky(v) <= f(m, [n]) / n with m = max_v |I_v|
        x = rng.standard_t(3.0, (10, 3))
        dirs = DirectionSet.build(3, m=64, seed=seed, extra=[np.eye(3)])
        result = spread_peaky_eval(x, TruncationParams(lam=0.5), dirs, np.eye(3))
        assert result.max_count >= 1
        sup = sparse_sup_f(x, result.max_count)
        assert result.summary()["sup_peaky"] <= sup.value / x.shape[0] + 1e-12


class TestSparseSup:
    """Exact f(k, [n]) by enumeration."""

    x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def test_values(self) -> None:
        assert sparse_sup_f(self.x, 1).value == pytest.approx(1.0)
        two = sparse_sup_f(self.x, 2)
        assert two.value == pytest.approx(2.0)
        assert two.support == (0, 1)
        assert sparse_sup_f(self.x, 3).value == pytest.approx(2.0)

    def test_matches_partial_sum(self) -> None:
        best = sparse_sup_f(self.x, 2)
        assert partial_sum_norm(self.x, best.support) == pytest.approx(best.value / 3)

    def test_monotone_in_k(self, rng: np.random.Generator) -> None:
        x = rng.standard_normal((8, 3))
        values = [sparse_sup_f(x, k).value for k in range(1, 9)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:], strict=False))

    def test_limits(self, rng: np.random.Generator) -> None:
        with pytest.raises(EnumerationLimitError):
            sparse_sup_f(rng.standard_normal((21, 2)), 2)
        with pytest.raises(ValueError):
            sparse_sup_f(self.x, 0)


class TestAlignedEigvec:
    """Sign alignment and the perturbation chain."""

    sigma = SymMatrix(entries=np.diag([3.0, 2.0, 1.0]))

    def test_chain(self) -> None:
        e = np.zeros((3, 3))
        e[0, 1] = e[1, 0] = 0.01
        result = aligned_eigvec(SymMatrix(entries=self.sigma.entries + e), self.sigma, 1)
        assert float(np.dot(result.u_hat, result.u)) >= 0.0
        assert result.certificate == pytest.approx(4.0 * math.sqrt(2.0) * 0.01)
        assert result.projector_distance == pytest.approx(math.sqrt(2.0) * 0.01, rel=0.01)
        assert result.chain_holds

    def test_chain_on_random_pairs(self, rng: np.random.Generator) -> None:
        """The chain holds on 1000 random (Sigma, Sigma_hat) pairs with g_j >= 0.5."""
        for _ in range(1000):
            d = int(rng.integers(2, 7))
            lam = np.cumsum(rng.uniform(0.5, 2.0, size=d))[::-1]
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            sigma = SymMatrix(entries=(q * lam) @ q.T)
            noise = rng.standard_normal((d, d)) * rng.uniform(0.01, 1.0)
            sigma_hat = SymMatrix(entries=sigma.entries + (noise + noise.T) / 2)
            result = aligned_eigvec(sigma_hat, sigma, int(rng.integers(1, d + 1)))
            assert result.chain_holds

    def test_identical(self) -> None:
        result = aligned_eigvec(self.sigma, self.sigma, 2)
        assert result.vector_distance == pytest.approx(0.0, abs=1e-12)
        assert result.certificate == 0.0

    def test_degenerate(self) -> None:
        with pytest.raises(GapDegeneracyError):
            aligned_eigvec(SymMatrix(entries=np.eye(3)), SymMatrix(entries=np.eye(3)), 1)
