"""Tests for symmetric matrix algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matconc.lib.errors import GapDegeneracyError, NotPSDError, NotUnitError, ZeroMatrixError
from matconc.lib.matcore import (
    RectMatrix,
    SymMatrix,
    aligned_distance,
    batch_op_norm,
    effective_rank,
    eig,
    hermitian_dilation,
    op_norm,
    projector_distance,
    psd_sqrt,
    relative_rank,
    spectral_gap,
    spectral_norm,
    stable_rank,
    tj_norm_formula,
    tj_operator,
)

entries = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


class TestSymMatrix:
    """Construction and validation."""

    def test_upper_triangle_wins(self) -> None:
        """Round-off asymmetry is accepted and resolved from the upper triangle."""
        a = SymMatrix(entries=[[1.0, 2.0], [2.0 + 1e-15, 3.0]])
        assert a.entries[1, 0] == a.entries[0, 1] == 2.0

    def test_rejects_asymmetric(self) -> None:
        with pytest.raises(ValueError):
            SymMatrix(entries=[[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_non_square(self) -> None:
        with pytest.raises(ValueError):
            SymMatrix(entries=np.zeros((2, 3)))

    def test_rejects_non_finite(self) -> None:
        with pytest.raises(ValueError):
            SymMatrix(entries=[[math.inf]])


class TestNorms:
    """Operator norm, effective and stable rank."""

    def test_op_norm_takes_absolute_value(self) -> None:
        assert op_norm(SymMatrix(entries=np.diag([3.0, -5.0]))) == pytest.approx(5.0)

    def test_batch_matches_single(self, rng: np.random.Generator) -> None:
        g = rng.standard_normal((6, 3, 3))
        stack = (g + g.transpose(0, 2, 1)) / 2
        expected = [op_norm(SymMatrix(entries=m)) for m in stack]
        np.testing.assert_allclose(batch_op_norm(stack), expected)

    def test_effective_rank_of_identity(self) -> None:
        assert effective_rank(SymMatrix(entries=np.eye(4))) == pytest.approx(4.0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 6), elements=entries))
    def test_effective_rank_in_range(self, g: np.ndarray) -> None:
        """1 <= r(A) <= d for every nonzero PSD A."""
        a = g @ g.T
        if np.max(np.abs(a)) < 1e-6:
            return
        r = effective_rank(SymMatrix(entries=a))
        assert 1.0 - 1e-9 <= r <= 4.0 + 1e-9

    def test_effective_rank_rejects_indefinite(self) -> None:
        with pytest.raises(NotPSDError):
            effective_rank(SymMatrix(entries=np.diag([1.0, -1.0])))

    def test_effective_rank_rejects_zero(self) -> None:
        with pytest.raises(ZeroMatrixError):
            effective_rank(SymMatrix(entries=np.zeros((3, 3))))

    def test_stable_rank(self) -> None:
        assert stable_rank(RectMatrix(entries=np.diag([3.0, 4.0]))) == pytest.approx(25.0 / 16.0)

    def test_stable_rank_rejects_zero(self) -> None:
        with pytest.raises(ZeroMatrixError):
            stable_rank(RectMatrix(entries=np.zeros((2, 2))))

    def test_psd_sqrt(self) -> None:
        root = psd_sqrt(SymMatrix(entries=np.diag([4.0, 9.0])))
        np.testing.assert_allclose(root.entries, np.diag([2.0, 3.0]), atol=1e-12)

    def test_dilation_norm_is_spectral_norm(self, rng: np.random.Generator) -> None:
        """||[[0, W], [W^T, 0]]|| = ||W|| over 1000 random W."""
        for _ in range(1000):
            rows, cols = (int(k) for k in rng.integers(1, 6, size=2))
            b = RectMatrix(entries=rng.uniform(-10.0, 10.0, size=(rows, cols)))
            assert op_norm(hermitian_dilation(b)) == pytest.approx(spectral_norm(b), rel=1e-10)

    def test_dilation_spectrum_of_row(self) -> None:
        dilation = hermitian_dilation(RectMatrix(entries=[[1.0, 1.0]]))
        assert dilation.dim == 3
        np.testing.assert_allclose(eig(dilation).eigenvalues, [math.sqrt(2.0), 0.0, -math.sqrt(2.0)], atol=1e-12)

    def test_stable_rank_literal(self) -> None:
        assert stable_rank(RectMatrix(entries=np.diag([2.0, 1.0]))) == pytest.approx(1.25)

    def test_effective_rank_is_dim_only_when_flat(self, rng: np.random.Generator) -> None:
        for d in range(1, 7):
            assert effective_rank(SymMatrix(entries=rng.uniform(0.1, 5.0) * np.eye(d))) == pytest.approx(d)
        for _ in range(200):
            d = int(rng.integers(2, 7))
            lam = rng.uniform(0.0, 5.0, size=d)
            lam[0] = lam.max() + 0.1
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            assert effective_rank(SymMatrix(entries=(q * lam) @ q.T)) < d - 1e-6


class TestSpectrum:
    """Eigendecomposition, gaps and T_j."""

    def test_eigenvalues_descending(self) -> None:
        spectrum = eig(SymMatrix(entries=np.diag([1.0, 3.0, 2.0])))
        np.testing.assert_allclose(spectrum.eigenvalues, [3.0, 2.0, 1.0])

    def test_reconstruct(self, rng: np.random.Generator) -> None:
        g = rng.standard_normal((5, 5))
        a = SymMatrix(entries=(g + g.T) / 2)
        np.testing.assert_allclose(eig(a).reconstruct(), a.entries, atol=1e-10)

    def test_gaps_are_one_sided_at_edges(self) -> None:
        spectrum = eig(SymMatrix(entries=np.diag([4.0, 2.0, 1.0])))
        assert spectral_gap(spectrum, 1) == pytest.approx(2.0)
        assert spectral_gap(spectrum, 2) == pytest.approx(1.0)
        assert spectral_gap(spectrum, 3) == pytest.approx(1.0)

    def test_degenerate_gap(self) -> None:
        with pytest.raises(GapDegeneracyError):
            spectral_gap(eig(SymMatrix(entries=np.eye(2))), 1)

    def test_gap_undefined_in_dimension_one(self) -> None:
        with pytest.raises(GapDegeneracyError):
            spectral_gap(eig(SymMatrix(entries=[[2.0]])), 1)

    def test_index_out_of_range(self) -> None:
        with pytest.raises(IndexError):
            spectral_gap(eig(SymMatrix(entries=np.diag([2.0, 1.0]))), 3)

    def test_relative_rank(self) -> None:
        gap, rank = relative_rank(eig(SymMatrix(entries=np.diag([4.0, 1.0]))), 1)
        assert gap == pytest.approx(3.0)
        assert rank == pytest.approx(1.0 / 3.0 + 4.0 / 3.0)

    def test_relative_rank_scale_invariant(self, rng: np.random.Generator) -> None:
        """Sigma -> c Sigma scales g_j by c and leaves r_j unchanged."""
        for _ in range(200):
            d = int(rng.integers(2, 7))
            lam = np.cumsum(rng.uniform(0.1, 2.0, size=d))[::-1]
            j = int(rng.integers(1, d + 1))
            c = float(rng.uniform(0.01, 100.0))
            gap, rank = relative_rank(eig(SymMatrix(entries=np.diag(lam))), j)
            scaled_gap, scaled_rank = relative_rank(eig(SymMatrix(entries=np.diag(c * lam))), j)
            assert scaled_gap == pytest.approx(c * gap, rel=1e-10)
            assert scaled_rank == pytest.approx(rank, rel=1e-10)

    def test_relative_rank_dominates_own_term(self, rng: np.random.Generator) -> None:
        """r_j >= lambda_j / g_j for PSD spectra."""
        for _ in range(200):
            d = int(rng.integers(2, 7))
            lam = np.cumsum(rng.uniform(0.1, 2.0, size=d))[::-1] - 0.1
            j = int(rng.integers(1, d + 1))
            gap, rank = relative_rank(eig(SymMatrix(entries=np.diag(lam))), j)
            assert rank >= lam[j - 1] / gap - 1e-12

    def test_tj_norm_matches_formula(self, rng: np.random.Generator) -> None:
        """||T_j Sigma T_j|| equals its closed form for every j."""
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        lam = np.array([5.0, 3.5, 2.0, 1.2, 0.3])
        sigma = SymMatrix(entries=(q * lam) @ q.T)
        spectrum = eig(sigma)
        for j in range(1, 6):
            t = tj_operator(spectrum, j).entries
            value = op_norm(SymMatrix(entries=t @ sigma.entries @ t))
            assert value == pytest.approx(tj_norm_formula(spectrum, j), rel=1e-8)

    def test_tj_identities_on_random_spectra(self, rng: np.random.Generator) -> None:
        """trace(T_j Sigma T_j) = r_j and the norm formula, over 1000 spectra."""
        for _ in range(1000):
            d = int(rng.integers(2, 7))
            lam = np.cumsum(rng.uniform(0.1, 2.0, size=d))[::-1]
            q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            sigma = SymMatrix(entries=(q * lam) @ q.T)
            spectrum = eig(sigma)
            j = int(rng.integers(1, d + 1))
            t = tj_operator(spectrum, j).entries
            tst = t @ sigma.entries @ t
            _, rank = relative_rank(spectrum, j)
            assert np.trace(tst) == pytest.approx(rank, rel=1e-10)
            assert op_norm(SymMatrix(entries=(tst + tst.T) / 2)) == pytest.approx(
                tj_norm_formula(spectrum, j), rel=1e-10
            )


class TestUnitVectors:
    """Eigenvector distances."""

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(np.float64, (4,), elements=entries),
        arrays(np.float64, (4,), elements=entries),
    )
    def test_aligned_below_projector(self, a: np.ndarray, b: np.ndarray) -> None:
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        u, v = a / np.linalg.norm(a), b / np.linalg.norm(b)
        assert aligned_distance(u, v) <= projector_distance(u, v) + 1e-12

    def test_projector_identity(self, rng: np.random.Generator) -> None:
        """d(u, v)^2 + 2 <u, v>^2 = 2."""
        for _ in range(1000):
            d = int(rng.integers(1, 8))
            u, v = rng.standard_normal((2, d))
            u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
            assert projector_distance(u, v) ** 2 + 2.0 * float(np.dot(u, v)) ** 2 == pytest.approx(2.0, abs=1e-12)

    def test_sign_flip_is_free(self) -> None:
        u = np.array([0.6, 0.8])
        assert aligned_distance(u, -u) == pytest.approx(0.0)
        assert projector_distance(u, -u) == pytest.approx(0.0)

    def test_rejects_non_unit(self) -> None:
        with pytest.raises(NotUnitError):
            projector_distance(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
