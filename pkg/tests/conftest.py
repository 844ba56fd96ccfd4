"""Shared test fixtures.

Add fixtures here that are used across multiple test files.
"""

from pathlib import Path

import numpy as np
import pytest

from matconc.lib.samplers import (
    CovarianceSpec,
    GaussianModel,
    ScalarHeavyEnsemble,
    SignFixedEnsemble,
    StudentTLaw,
)
from matconc.lib.seeding import SeedSpec


@pytest.fixture
def seed() -> SeedSpec:
    return SeedSpec(master_seed=1234)


@pytest.fixture
def sign_fixed() -> SignFixedEnsemble:
    """Twenty 4x4 matrices with norms in [0.5, 1]."""
    return SignFixedEnsemble(n=20, dim=4, norm_bound=1.0, basis_seed=3)


@pytest.fixture
def scalar_heavy() -> ScalarHeavyEnsemble:
    return ScalarHeavyEnsemble(n=20, dim=4, basis_seed=3, scalar=StudentTLaw(dof=5.0))


@pytest.fixture
def gaussian_model() -> GaussianModel:
    return GaussianModel(covariance=CovarianceSpec(eigenvalues=[4.0, 2.0, 1.0, 0.5], basis="canonical"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)


@pytest.fixture
def reports_dir(tmp_path: Path) -> Path:
    return tmp_path / "reports"
