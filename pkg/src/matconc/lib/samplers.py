"""Seeded random vector models and matrix ensembles.

Vector models produce centered random vectors with a prescribed
covariance ``Sigma``. Elliptical models are scale mixtures
``X = R Sigma^{1/2} Z`` with ``E R^2 = 1`` (Gaussian: ``R = 1``;
Student-t: ``R = sqrt((nu-2)/W)``, ``W ~ chi^2_nu``; Pareto:
``R = Y / sqrt(alpha/(alpha-2))`` with ``Y`` classical Pareto).
Karhunen-Loeve models draw i.i.d. unit-variance coefficients along the
eigenbasis of ``Sigma``.

Ensembles describe the law of ``(W_1, ..., W_n)``:

- ``sign_fixed``: ``eps_k A_k`` for fixed symmetric ``A_k``
- ``scalar_heavy``: ``xi_k A_k`` with i.i.d. unit-variance scalars
- ``centered_rank_one``: ``X_k X_k^T - Sigma``
- ``psd_rank_one``: ``X_k X_k^T``

All draws go through :func:`matconc.lib.seeding.rng_for`, so a trial is
a pure function of its :class:`SeedSpec`.

Examples:
    Build a flat covariance and check its effective rank::

        >>> spec = CovarianceSpec(eigenvalues=[1, 1, 1, 1])
        >>> effective_rank(build_covariance(spec))
        4.0

    A sign-fixed ensemble from explicit matrices::

        >>> e = SignFixedEnsemble(matrices=[[[2.0, 0.0], [0.0, 1.0]]])
        >>> draws = build_ensemble(e, SeedSpec(master_seed=1))
        >>> draws.shape
        (1, 2, 2)
"""

import logging
import math
from functools import cached_property
from typing import Annotated, ClassVar, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from matconc.lib.errors import ConfigError
from matconc.lib.estimators import DirectionSet, empirical_kappa
from matconc.lib.matcore import SymMatrix, batch_op_norm
from matconc.lib.seeding import Purpose, SeedSpec, rademacher, rng_for

logger = logging.getLogger(__name__)

VARIANCE_PROXY_TRIALS = 20_000


# -- Scalar laws --------------------------------------------------------------


def gaussian_abs_moment(p: float) -> float:
    """E|g|^p for standard normal g."""
    return math.exp(p / 2.0 * math.log(2.0) + special.gammaln((p + 1.0) / 2.0)) / math.sqrt(math.pi)


class GaussianLaw(BaseModel):
    """Standard normal."""

    kind: Literal["gaussian"] = "gaussian"

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        return rng.standard_normal(size)

    def abs_moment(self, p: float) -> float:
        return gaussian_abs_moment(p)


class StudentTLaw(BaseModel):
    """Student-t with ``dof`` degrees of freedom, rescaled to unit variance."""

    kind: Literal["student_t"] = "student_t"
    dof: float = Field(gt=2.0, description="Degrees of freedom nu > 2")

    @property
    def scale(self) -> float:
        return math.sqrt((self.dof - 2.0) / self.dof)

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        return rng.standard_t(self.dof, size) * self.scale

    def abs_moment(self, p: float) -> float:
        nu = self.dof
        if p >= nu:
            return math.inf
        log_m = (
            p / 2.0 * math.log(nu)
            + special.gammaln((p + 1.0) / 2.0)
            + special.gammaln((nu - p) / 2.0)
            - 0.5 * math.log(math.pi)
            - special.gammaln(nu / 2.0)
        )
        return math.exp(log_m) * self.scale**p


class ParetoLaw(BaseModel):
    """Symmetric classical Pareto with tail index ``alpha``, rescaled to unit variance."""

    kind: Literal["pareto"] = "pareto"
    alpha: float = Field(gt=2.0, description="Tail index alpha > 2")

    @property
    def scale(self) -> float:
        return math.sqrt(self.alpha / (self.alpha - 2.0))

    def draw_radial(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        """Positive Pareto(alpha) on [1, inf) divided by its root second moment."""
        return (1.0 + rng.pareto(self.alpha, size)) / self.scale

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        radial = self.draw_radial(rng, size)
        return radial * (rng.integers(0, 2, size=size) * 2.0 - 1.0)

    def abs_moment(self, p: float) -> float:
        if p >= self.alpha:
            return math.inf
        return self.alpha / (self.alpha - p) / self.scale**p


class RademacherLaw(BaseModel):
    """Symmetric signs."""

    kind: Literal["rademacher"] = "rademacher"

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        return rng.integers(0, 2, size=size) * 2.0 - 1.0

    def abs_moment(self, p: float) -> float:
        return 1.0


ScalarLaw = Annotated[
    GaussianLaw | StudentTLaw | ParetoLaw | RademacherLaw,
    Field(discriminator="kind"),
]


# -- Covariance ---------------------------------------------------------------


class CovarianceSpec(BaseModel):
    """Sigma from an explicit spectrum or a decay law, in a seeded basis."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: list[float] | None = Field(default=None, description="Explicit spectrum")
    decay: Literal["flat", "geometric", "polynomial"] | None = Field(default=None)
    dim: int | None = Field(default=None, ge=1)
    rate: float = Field(default=0.5, gt=0.0, description="Geometric ratio or polynomial exponent")
    scale: float = Field(default=1.0, gt=0.0, description="Multiplier of the decay law")
    basis: Literal["canonical", "random"] = "random"
    basis_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_source(self) -> Self:
        if self.eigenvalues is None and (self.decay is None or self.dim is None):
            raise ValueError("give either eigenvalues or decay and dim")
        if self.eigenvalues is not None:
            if not self.eigenvalues:
                raise ValueError("eigenvalues must not be empty")
            if any(x < 0 for x in self.eigenvalues):
                raise ValueError("eigenvalues must be nonnegative")
            if not any(x > 0 for x in self.eigenvalues):
                raise ValueError("all-zero spectrum")
        return self

    @property
    def size(self) -> int:
        return len(self.eigenvalues) if self.eigenvalues is not None else int(self.dim or 0)

    def resized(self, dim: int) -> "CovarianceSpec":
        if self.eigenvalues is not None:
            raise ConfigError("cannot resize an explicit spectrum")
        return CovarianceSpec.model_validate(self.model_dump() | {"dim": dim})

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        if self.eigenvalues is not None:
            lam = np.asarray(self.eigenvalues, dtype=np.float64)
        else:
            idx = np.arange(self.size, dtype=np.float64)
            match self.decay:
                case "flat":
                    lam = np.ones(self.size)
                case "geometric":
                    lam = self.rate**idx
                case _:
                    lam = (idx + 1.0) ** -self.rate
            lam = self.scale * lam
        return np.sort(lam)[::-1].copy()

    @cached_property
    def eigenbasis(self) -> np.ndarray:
        """Orthonormal columns; column i carries ``spectrum[i]``."""
        d = self.size
        if self.basis == "canonical":
            return np.eye(d)
        rng = rng_for(SeedSpec(master_seed=self.basis_seed), Purpose.BASIS)
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        return q * np.where(np.diag(r) < 0, -1.0, 1.0)

    @cached_property
    def matrix(self) -> np.ndarray:
        q = self.eigenbasis
        sigma = (q * self.spectrum) @ q.T
        return (sigma + sigma.T) / 2

    @cached_property
    def root(self) -> np.ndarray:
        q = self.eigenbasis
        root = (q * np.sqrt(self.spectrum)) @ q.T
        return (root + root.T) / 2


def build_covariance(spec: CovarianceSpec) -> SymMatrix:
    """Sigma = Q diag(lambda) Q^T with Q canonical or drawn from ``basis_seed``."""
    return SymMatrix(entries=spec.matrix)


def analytic_effective_rank(spec: CovarianceSpec) -> float:
    lam = spec.spectrum
    return float(lam.sum() / lam.max())


# -- Vector models ------------------------------------------------------------


class Kappa(BaseModel):
    """Hypercontractivity ratio sup_v E^{1/p}|<X,v>|^p / E^{1/2}<X,v>^2."""

    value: float
    p: float
    estimated: bool = Field(description="True when obtained by Monte Carlo")


class _VectorModelBase(BaseModel):
    covariance: CovarianceSpec

    @property
    def dim(self) -> int:
        return self.covariance.size

    def resized(self, dim: int) -> Self:
        return type(self).model_validate(self.model_dump() | {"covariance": self.covariance.resized(dim)})

    def radial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.ones(n)

    def radial_moment(self, p: float) -> float:
        return 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n vectors as rows of an (n, d) array."""
        z = rng.standard_normal((n, self.dim))
        return self.radial(rng, n)[:, None] * (z @ self.covariance.root)

    def analytic_kappa(self, p: float) -> float | None:
        """(E R^p)^{1/p} (E|g|^p)^{1/p}; direction free for elliptical laws."""
        radial = self.radial_moment(p)
        if not math.isfinite(radial):
            return math.inf
        return (radial * gaussian_abs_moment(p)) ** (1.0 / p)

    def fourth_moment_factor(self) -> float:
        """E R^4, the factor in E ||X||^2 X X^T = E R^4 (tr(Sigma) Sigma + 2 Sigma^2)."""
        return self.radial_moment(4.0)


class GaussianModel(_VectorModelBase):
    """X ~ N(0, Sigma)."""

    kind: Literal["gaussian"] = "gaussian"


class StudentTModel(_VectorModelBase):
    """Multivariate t with ``dof`` degrees of freedom and covariance Sigma."""

    kind: Literal["student_t"] = "student_t"
    dof: float = Field(gt=2.0, description="Degrees of freedom nu > 2")

    def radial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.sqrt((self.dof - 2.0) / rng.chisquare(self.dof, n))

    def radial_moment(self, p: float) -> float:
        nu = self.dof
        if p >= nu:
            return math.inf
        log_m = (
            p / 2.0 * math.log((nu - 2.0) / 2.0)
            + special.gammaln((nu - p) / 2.0)
            - special.gammaln(nu / 2.0)
        )
        return math.exp(log_m)


class ParetoModel(_VectorModelBase):
    """Gaussian scale mixture with a Pareto(alpha) radial factor."""

    kind: Literal["pareto"] = "pareto"
    alpha: float = Field(gt=2.0, description="Tail index alpha > 2")

    def radial(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return ParetoLaw(alpha=self.alpha).draw_radial(rng, n)

    def radial_moment(self, p: float) -> float:
        return ParetoLaw(alpha=self.alpha).abs_moment(p)


class KLModel(_VectorModelBase):
    """X = sum_i sqrt(lambda_i) eta_i u_i with i.i.d. coefficients eta_i."""

    kind: Literal["kl"] = "kl"
    coefficients: ScalarLaw = Field(default_factory=GaussianLaw)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        eta = self.coefficients.draw(rng, (n, self.dim))
        cov = self.covariance
        return (eta * np.sqrt(cov.spectrum)) @ cov.eigenbasis.T

    def analytic_kappa(self, p: float) -> float | None:
        if isinstance(self.coefficients, GaussianLaw):
            return gaussian_abs_moment(p) ** (1.0 / p)
        return None

    def fourth_moment_factor(self) -> float:
        return math.nan


VectorModel = Annotated[
    GaussianModel | StudentTModel | ParetoModel | KLModel,
    Field(discriminator="kind"),
]


def sample_vectors(model: VectorModel, n: int, seed: SeedSpec) -> np.ndarray:
    """n i.i.d. copies of X as rows, deterministic under ``seed``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return model.draw(rng_for(seed, Purpose.DRAW), n)


def hypercontractivity(
    model: VectorModel,
    p: float,
    *,
    seed: SeedSpec | None = None,
    samples: int = 100_000,
    directions: int = 256,
) -> Kappa:
    """kappa for ``model`` at order ``p``.

    Analytic for elliptical models and Gaussian coefficients; otherwise an
    empirical L_p/L_2 ratio maximised over a seeded direction set.
    """
    value = model.analytic_kappa(p)
    if value is not None:
        return Kappa(value=value, p=p, estimated=False)
    seed = seed or SeedSpec(master_seed=0)
    x = model.draw(rng_for(seed, Purpose.AUX), samples)
    dirs = DirectionSet.build(
        model.dim,
        m=directions,
        seed=seed,
        extra=[model.covariance.eigenbasis],
    )
    estimate = empirical_kappa(x, dirs, p)
    logger.info("Estimated kappa=%.4f (p=%.1f) from %d samples", estimate, p, samples)
    return Kappa(value=estimate, p=p, estimated=True)


# -- Ensembles ----------------------------------------------------------------


class Summands(BaseModel):
    """One draw of (W_1, ..., W_n) in a factored form.

    ``weights`` combine as ``sum_k weights_k W_k`` without materialising
    the stack; ``norms`` holds ``||W_k||``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    norms: np.ndarray
    coefficients: np.ndarray | None = None
    fixed: np.ndarray | None = None
    vectors: np.ndarray | None = None
    center: np.ndarray | None = None

    def combine(self, weights: np.ndarray) -> np.ndarray:
        """sum_k weights_k W_k."""
        if self.fixed is not None and self.coefficients is not None:
            return np.tensordot(weights * self.coefficients, self.fixed, axes=1)
        assert self.vectors is not None
        x = self.vectors
        total = (x.T * weights) @ x
        if self.center is not None:
            total = total - float(np.sum(weights)) * self.center
        return (total + total.T) / 2

    def materialize(self) -> np.ndarray:
        """The explicit (n, d, d) stack."""
        if self.fixed is not None and self.coefficients is not None:
            return self.coefficients[:, None, None] * self.fixed
        assert self.vectors is not None
        x = self.vectors
        stack = x[:, :, None] * x[:, None, :]
        if self.center is not None:
            stack = stack - self.center
        return stack


class VarianceProxy(BaseModel):
    """V_n^2 = sum_k E W_k^2, exact or estimated."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    estimated: bool

    @property
    def sigma2(self) -> float:
        return float(batch_op_norm(self.matrix))


class _FixedMatrixEnsemble(BaseModel):
    """Ensembles built on fixed symmetric matrices A_1..A_n."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrices: list[list[list[float]]] | None = Field(default=None, description="Explicit A_k")
    n: int | None = Field(default=None, ge=1, description="Number of generated A_k")
    dim: int | None = Field(default=None, ge=1, description="Dimension of generated A_k")
    norm_bound: float = Field(default=1.0, ge=0.0, description="Generated ||A_k|| <= norm_bound")
    basis_seed: int = Field(default=0, ge=0, description="Seed of the generated A_k")

    @model_validator(mode="after")
    def check_source(self) -> Self:
        if self.matrices is None and (self.n is None or self.dim is None):
            raise ValueError("give either matrices or n and dim")
        if self.matrices is not None:
            arr = np.asarray(self.matrices, dtype=np.float64)
            if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] == 0:
                raise ValueError(f"matrices must have shape (n, d, d), got {arr.shape}")
            scale = max(1.0, float(np.max(np.abs(arr))))
            if float(np.max(np.abs(arr - arr.transpose(0, 2, 1)))) > 1e-12 * scale:
                raise ValueError("matrices must be symmetric")
        return self

    @cached_property
    def fixed(self) -> np.ndarray:
        if self.matrices is not None:
            arr = np.asarray(self.matrices, dtype=np.float64)
            return (arr + arr.transpose(0, 2, 1)) / 2
        assert self.n is not None and self.dim is not None
        rng = rng_for(SeedSpec(master_seed=self.basis_seed), Purpose.BASIS)
        g = rng.standard_normal((self.n, self.dim, self.dim))
        g = (g + g.transpose(0, 2, 1)) / 2
        norms = batch_op_norm(g)
        scale = self.norm_bound * rng.uniform(0.5, 1.0, self.n) / norms
        return g * scale[:, None, None]

    @cached_property
    def fixed_norms(self) -> np.ndarray:
        return batch_op_norm(self.fixed)

    @property
    def size(self) -> int:
        return int(self.fixed.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.fixed.shape[1])

    def resized(self, n: int | None = None, dim: int | None = None) -> Self:
        if self.matrices is not None:
            raise ConfigError("cannot resize an ensemble given by explicit matrices")
        update: dict[str, int] = {}
        if n is not None:
            update["n"] = n
        if dim is not None:
            update["dim"] = dim
        return type(self).model_validate(self.model_dump() | update)

    def fixed_variance(self) -> np.ndarray:
        """sum_k A_k^2."""
        a = self.fixed
        return np.einsum("kij,kjl->il", a, a)


class SignFixedEnsemble(_FixedMatrixEnsemble):
    """W_k = eps_k A_k with independent signs."""

    kind: Literal["sign_fixed"] = "sign_fixed"

    is_symmetric: ClassVar[bool] = True

    def draw_summands(self, seed: SeedSpec) -> Summands:
        eps = rademacher(rng_for(seed, Purpose.DRAW), self.size)
        return Summands(norms=self.fixed_norms.copy(), coefficients=eps, fixed=self.fixed)

    def variance_proxy(self, seed: SeedSpec | None = None) -> VarianceProxy:
        return VarianceProxy(matrix=self.fixed_variance(), estimated=False)

    def population_max_norm(self) -> float:
        """M = max_k ||A_k|| exactly; E M equals it."""
        return float(self.fixed_norms.max())


class ScalarHeavyEnsemble(_FixedMatrixEnsemble):
    """W_k = xi_k A_k with i.i.d. unit-variance symmetric scalars."""

    kind: Literal["scalar_heavy"] = "scalar_heavy"
    scalar: ScalarLaw = Field(default_factory=GaussianLaw)

    is_symmetric: ClassVar[bool] = True

    def draw_summands(self, seed: SeedSpec) -> Summands:
        xi = self.scalar.draw(rng_for(seed, Purpose.DRAW), self.size)
        return Summands(norms=np.abs(xi) * self.fixed_norms, coefficients=xi, fixed=self.fixed)

    def variance_proxy(self, seed: SeedSpec | None = None) -> VarianceProxy:
        return VarianceProxy(matrix=self.fixed_variance(), estimated=False)


class _RankOneEnsemble(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: VectorModel
    n: int = Field(ge=1, description="Number of summands")

    @property
    def size(self) -> int:
        return self.n

    @property
    def dimension(self) -> int:
        return self.model.dim

    def resized(self, n: int | None = None, dim: int | None = None) -> Self:
        update: dict[str, object] = {}
        if n is not None:
            update["n"] = n
        if dim is not None:
            update["model"] = self.model.resized(dim)
        return type(self).model_validate(self.model_dump() | update)

    def _gram_second_moment(self, seed: SeedSpec | None) -> tuple[np.ndarray, bool]:
        """E ||X||^2 X X^T, analytic for elliptical models."""
        cov = self.model.covariance
        factor = self.model.fourth_moment_factor()
        sigma = cov.matrix
        if not math.isnan(factor):
            if not math.isfinite(factor):
                raise ConfigError("variance proxy needs finite fourth moments")
            return factor * (np.trace(sigma) * sigma + 2.0 * sigma @ sigma), False
        x = self.model.draw(rng_for(seed or SeedSpec(master_seed=0), Purpose.AUX), VARIANCE_PROXY_TRIALS)
        sq = np.einsum("ij,ij->i", x, x)
        m = (x.T * sq) @ x / x.shape[0]
        return (m + m.T) / 2, True


class CenteredRankOneEnsemble(_RankOneEnsemble):
    """W_k = X_k X_k^T - Sigma."""

    kind: Literal["centered_rank_one"] = "centered_rank_one"

    is_symmetric: ClassVar[bool] = False

    def draw_summands(self, seed: SeedSpec) -> Summands:
        x = self.model.draw(rng_for(seed, Purpose.DRAW), self.n)
        sigma = self.model.covariance.matrix
        stack = x[:, :, None] * x[:, None, :] - sigma
        return Summands(norms=batch_op_norm(stack), vectors=x, center=sigma)

    def variance_proxy(self, seed: SeedSpec | None = None) -> VarianceProxy:
        m, estimated = self._gram_second_moment(seed)
        sigma = self.model.covariance.matrix
        return VarianceProxy(matrix=self.n * (m - sigma @ sigma), estimated=estimated)


class PsdRankOneEnsemble(_RankOneEnsemble):
    """W_k = X_k X_k^T."""

    kind: Literal["psd_rank_one"] = "psd_rank_one"

    is_symmetric: ClassVar[bool] = False

    def draw_summands(self, seed: SeedSpec) -> Summands:
        x = self.model.draw(rng_for(seed, Purpose.DRAW), self.n)
        return Summands(norms=np.einsum("ij,ij->i", x, x), vectors=x)

    def variance_proxy(self, seed: SeedSpec | None = None) -> VarianceProxy:
        m, estimated = self._gram_second_moment(seed)
        return VarianceProxy(matrix=self.n * m, estimated=estimated)

    def mean_sum(self) -> np.ndarray:
        """A_n = n Sigma."""
        return self.n * self.model.covariance.matrix


Ensemble = Annotated[
    SignFixedEnsemble | ScalarHeavyEnsemble | CenteredRankOneEnsemble | PsdRankOneEnsemble,
    Field(discriminator="kind"),
]


def build_ensemble(e: Ensemble, trial: SeedSpec) -> np.ndarray:
    """(W_1, ..., W_n) for one trial as an (n, d, d) array."""
    return e.draw_summands(trial).materialize()


def truncate_split(
    w: np.ndarray, level: float, signs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split eps_k W_k at ``level``.

    Returns ``(W~, Delta)`` with ``W~_k = eps_k W_k 1{||W_k|| <= level}`` and
    ``Delta_k = eps_k W_k 1{||W_k|| > level}``.
    """
    if level < 0:
        raise ValueError(f"truncation level must be nonnegative, got {level}")
    signed = signs[:, None, None] * w
    big = batch_op_norm(w) > level
    kept = np.where(big[:, None, None], 0.0, signed)
    delta = np.where(big[:, None, None], signed, 0.0)
    return kept, delta
