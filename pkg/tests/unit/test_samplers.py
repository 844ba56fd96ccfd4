"""Tests for scalar laws, covariance specs, vector models and ensembles."""

import math

import numpy as np
import pytest
from pydantic import TypeAdapter

from matconc.lib.errors import ConfigError
from matconc.lib.matcore import SymMatrix, effective_rank, eig
from matconc.lib.samplers import (
    CenteredRankOneEnsemble,
    CovarianceSpec,
    Ensemble,
    GaussianLaw,
    GaussianModel,
    KLModel,
    ParetoLaw,
    ParetoModel,
    PsdRankOneEnsemble,
    RademacherLaw,
    ScalarHeavyEnsemble,
    SignFixedEnsemble,
    StudentTLaw,
    StudentTModel,
    VectorModel,
    analytic_effective_rank,
    build_covariance,
    build_ensemble,
    gaussian_abs_moment,
    hypercontractivity,
    sample_vectors,
    truncate_split,
)
from matconc.lib.seeding import SeedSpec


class TestScalarLaws:
    """Unit-variance scalar laws and their absolute moments."""

    def test_gaussian_moments(self) -> None:
        assert gaussian_abs_moment(2.0) == pytest.approx(1.0)
        assert gaussian_abs_moment(4.0) == pytest.approx(3.0)
        assert GaussianLaw().abs_moment(1.0) == pytest.approx(math.sqrt(2.0 / math.pi))

    @pytest.mark.parametrize("law", [StudentTLaw(dof=5.0), ParetoLaw(alpha=6.0), RademacherLaw()])
    def test_unit_variance(self, law: StudentTLaw | ParetoLaw | RademacherLaw) -> None:
        assert law.abs_moment(2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("law", [StudentTLaw(dof=5.0), ParetoLaw(alpha=6.0)])
    def test_empirical_variance(self, law: StudentTLaw | ParetoLaw, rng: np.random.Generator) -> None:
        x = law.draw(rng, 200_000)
        assert float(np.mean(x * x)) == pytest.approx(1.0, abs=0.05)
        assert abs(float(np.mean(x))) < 0.02

    def test_infinite_moments(self) -> None:
        assert StudentTLaw(dof=5.0).abs_moment(5.0) == math.inf
        assert ParetoLaw(alpha=6.0).abs_moment(7.0) == math.inf

    def test_rademacher_values(self, rng: np.random.Generator) -> None:
        assert set(np.unique(RademacherLaw().draw(rng, 1000))) == {-1.0, 1.0}

    def test_parameter_ranges(self) -> None:
        with pytest.raises(ValueError):
            StudentTLaw(dof=2.0)
        with pytest.raises(ValueError):
            ParetoLaw(alpha=1.5)


class TestCovarianceSpec:
    """Spectra, bases and validation."""

    def test_decay_laws(self) -> None:
        geometric = CovarianceSpec(decay="geometric", dim=3, rate=0.5)
        assert geometric.spectrum.tolist() == pytest.approx([1.0, 0.5, 0.25])
        polynomial = CovarianceSpec(decay="polynomial", dim=3, rate=1.0, scale=2.0)
        assert polynomial.spectrum.tolist() == pytest.approx([2.0, 1.0, 2.0 / 3.0])
        assert CovarianceSpec(decay="flat", dim=5).spectrum.tolist() == [1.0] * 5

    def test_explicit_spectrum_sorted(self) -> None:
        spec = CovarianceSpec(eigenvalues=[1.0, 3.0, 2.0], basis="canonical")
        assert spec.spectrum.tolist() == [3.0, 2.0, 1.0]
        assert np.allclose(spec.matrix, np.diag([3.0, 2.0, 1.0]))

    def test_random_basis_is_orthonormal(self) -> None:
        spec = CovarianceSpec(decay="geometric", dim=6, rate=0.7, basis_seed=11)
        q = spec.eigenbasis
        assert np.allclose(q.T @ q, np.eye(6), atol=1e-12)
        assert eig(build_covariance(spec)).eigenvalues.tolist() == pytest.approx(spec.spectrum.tolist())
        assert np.allclose(spec.root @ spec.root, spec.matrix, atol=1e-12)

    def test_basis_depends_only_on_seed(self) -> None:
        a = CovarianceSpec(decay="flat", dim=4, basis_seed=5)
        b = CovarianceSpec(decay="geometric", dim=4, basis_seed=5)
        assert np.array_equal(a.eigenbasis, b.eigenbasis)

    def test_effective_rank(self) -> None:
        spec = CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 1.0], basis_seed=2)
        assert analytic_effective_rank(spec) == pytest.approx(2.0)
        assert effective_rank(build_covariance(spec)) == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "kwargs",
        [{}, {"eigenvalues": []}, {"eigenvalues": [1.0, -1.0]}, {"eigenvalues": [0.0, 0.0]}, {"decay": "flat"}],
    )
    def test_invalid(self, kwargs: dict[str, object]) -> None:
        with pytest.raises(ValueError):
            CovarianceSpec.model_validate(kwargs)

    def test_resize(self) -> None:
        assert CovarianceSpec(decay="flat", dim=3).resized(7).size == 7
        with pytest.raises(ConfigError):
            CovarianceSpec(eigenvalues=[1.0]).resized(2)


class TestVectorModels:
    """Seeded vector draws and hypercontractivity."""

    def test_deterministic(self, gaussian_model: GaussianModel, seed: SeedSpec) -> None:
        a = sample_vectors(gaussian_model, 50, seed)
        b = sample_vectors(gaussian_model, 50, seed)
        c = sample_vectors(gaussian_model, 50, seed.stream(1))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_rejects_empty(self, gaussian_model: GaussianModel, seed: SeedSpec) -> None:
        with pytest.raises(ValueError):
            sample_vectors(gaussian_model, 0, seed)

    @pytest.mark.parametrize(
        "model",
        [
            GaussianModel(covariance=CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 0.5], basis="canonical")),
            StudentTModel(dof=8.0, covariance=CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 0.5], basis="canonical")),
            ParetoModel(alpha=6.0, covariance=CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 0.5], basis="canonical")),
            KLModel(
                coefficients=RademacherLaw(),
                covariance=CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 0.5], basis="canonical"),
            ),
        ],
    )
    def test_covariance_matches(self, model: VectorModel, seed: SeedSpec) -> None:
        x = sample_vectors(model, 200_000, seed)
        cov = x.T @ x / x.shape[0]
        assert np.allclose(np.diag(cov), [4.0, 2.0, 1.0, 0.5], rtol=0.05)
        assert abs(cov[0, 1]) < 0.1

    def test_radial_second_moment(self) -> None:
        cov = CovarianceSpec(eigenvalues=[1.0])
        assert StudentTModel(dof=5.0, covariance=cov).radial_moment(2.0) == pytest.approx(1.0)
        assert ParetoModel(alpha=6.0, covariance=cov).radial_moment(2.0) == pytest.approx(1.0)

    def test_gaussian_kappa(self, gaussian_model: GaussianModel) -> None:
        kappa = hypercontractivity(gaussian_model, 4.0)
        assert kappa.value == pytest.approx(3.0**0.25)
        assert not kappa.estimated

    def test_heavy_kappa(self) -> None:
        cov = CovarianceSpec(eigenvalues=[1.0, 1.0])
        assert hypercontractivity(StudentTModel(dof=5.0, covariance=cov), 5.0).value == math.inf
        assert hypercontractivity(StudentTModel(dof=8.0, covariance=cov), 4.0).value > 3.0**0.25

    def test_estimated_kappa(self, seed: SeedSpec) -> None:
        model = KLModel(coefficients=RademacherLaw(), covariance=CovarianceSpec(eigenvalues=[2.0, 1.0, 1.0]))
        kappa = hypercontractivity(model, 4.0, seed=seed, samples=20_000, directions=64)
        assert kappa.estimated
        assert 1.0 <= kappa.value <= 3.0**0.25 + 0.05


class TestEnsembles:
    """Ensemble draws, variance proxies and truncation."""

    def test_generated_norms(self, sign_fixed: SignFixedEnsemble) -> None:
        assert sign_fixed.size == 20
        assert sign_fixed.dimension == 4
        assert np.all(sign_fixed.fixed_norms <= 1.0 + 1e-12)
        assert np.all(sign_fixed.fixed_norms >= 0.5 - 1e-12)
        assert sign_fixed.population_max_norm() == pytest.approx(float(sign_fixed.fixed_norms.max()))

    def test_combine_matches_materialize(self, sign_fixed: SignFixedEnsemble, seed: SeedSpec) -> None:
        summands = sign_fixed.draw_summands(seed)
        weights = np.linspace(-1.0, 1.0, sign_fixed.size)
        stack = summands.materialize()
        assert np.allclose(summands.combine(weights), np.tensordot(weights, stack, axes=1))
        assert np.allclose(summands.norms, sign_fixed.fixed_norms)

    def test_variance_proxy_sign_fixed(self, sign_fixed: SignFixedEnsemble) -> None:
        proxy = sign_fixed.variance_proxy()
        expected = sum(a @ a for a in sign_fixed.fixed)
        assert np.allclose(proxy.matrix, expected)
        assert not proxy.estimated
        assert proxy.sigma2 == pytest.approx(float(np.linalg.eigvalsh(expected)[-1]))

    def test_scalar_heavy_norms(self, scalar_heavy: ScalarHeavyEnsemble, seed: SeedSpec) -> None:
        summands = scalar_heavy.draw_summands(seed)
        assert summands.coefficients is not None
        assert np.allclose(summands.norms, np.abs(summands.coefficients) * scalar_heavy.fixed_norms)

    def test_explicit_matrices_validated(self) -> None:
        with pytest.raises(ValueError):
            SignFixedEnsemble(matrices=[[[1.0, 2.0], [0.0, 1.0]]])
        with pytest.raises(ValueError):
            SignFixedEnsemble(matrices=[[1.0, 0.0]])
        with pytest.raises(ValueError):
            SignFixedEnsemble(n=3)

    def test_resize(self, sign_fixed: SignFixedEnsemble) -> None:
        smaller = sign_fixed.resized(n=5, dim=3)
        assert (smaller.size, smaller.dimension) == (5, 3)
        with pytest.raises(ConfigError):
            SignFixedEnsemble(matrices=[[[1.0]]]).resized(n=2)

    def test_centered_rank_one(self, gaussian_model: GaussianModel, seed: SeedSpec) -> None:
        e = CenteredRankOneEnsemble(model=gaussian_model, n=10)
        stack = build_ensemble(e, seed)
        x = sample_vectors(gaussian_model, 10, seed)
        assert stack.shape == (10, 4, 4)
        assert np.allclose(stack[0], np.outer(x[0], x[0]) - np.diag([4.0, 2.0, 1.0, 0.5]))
        summands = e.draw_summands(seed)
        assert np.allclose(summands.combine(np.ones(10)), stack.sum(axis=0))

    def test_centered_variance_proxy(self, gaussian_model: GaussianModel) -> None:
        # n (tr(Sigma) Sigma + Sigma^2) for Gaussian X
        proxy = CenteredRankOneEnsemble(model=gaussian_model, n=10).variance_proxy()
        assert proxy.sigma2 == pytest.approx(10 * (7.5 * 4.0 + 16.0))
        assert not proxy.estimated

    def test_psd_rank_one(self, gaussian_model: GaussianModel, seed: SeedSpec) -> None:
        e = PsdRankOneEnsemble(model=gaussian_model, n=6)
        assert np.allclose(e.mean_sum(), 6 * np.diag([4.0, 2.0, 1.0, 0.5]))
        summands = e.draw_summands(seed)
        x = sample_vectors(gaussian_model, 6, seed)
        assert np.allclose(summands.norms, np.sum(x * x, axis=1))

    def test_kl_variance_proxy_estimated(self, seed: SeedSpec) -> None:
        model = KLModel(coefficients=RademacherLaw(), covariance=CovarianceSpec(eigenvalues=[1.0, 1.0]))
        proxy = PsdRankOneEnsemble(model=model, n=1).variance_proxy(seed)
        assert proxy.estimated
        # ||X||^2 = 2 exactly, so E ||X||^2 X X^T = 2 I
        assert np.allclose(proxy.matrix, 2.0 * np.eye(2), atol=0.05)

    def test_infinite_fourth_moment(self) -> None:
        model = StudentTModel(dof=3.0, covariance=CovarianceSpec(eigenvalues=[1.0, 1.0]))
        with pytest.raises(ConfigError):
            CenteredRankOneEnsemble(model=model, n=5).variance_proxy()

    def test_discriminated_union(self) -> None:
        e = TypeAdapter(Ensemble).validate_python({"kind": "sign_fixed", "n": 3, "dim": 2})
        assert isinstance(e, SignFixedEnsemble)
        assert e.is_symmetric

    def test_truncate_split(self) -> None:
        w = np.stack([np.eye(2) * s for s in (0.5, 2.0, 3.0)])
        signs = np.array([1.0, -1.0, 1.0])
        kept, delta = truncate_split(w, 2.0, signs)
        assert np.allclose(kept + delta, signs[:, None, None] * w)
        assert np.allclose(delta[:2], 0.0)
        assert np.allclose(kept[2], 0.0)
        with pytest.raises(ValueError):
            truncate_split(w, -1.0, signs)


def test_build_ensemble_is_deterministic(scalar_heavy: ScalarHeavyEnsemble, seed: SeedSpec) -> None:
    assert np.array_equal(build_ensemble(scalar_heavy, seed), build_ensemble(scalar_heavy, seed))
    assert SymMatrix(entries=build_ensemble(scalar_heavy, seed).sum(axis=0)).dim == 4
