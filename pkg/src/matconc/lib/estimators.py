"""Covariance estimators and their diagnostics.

Sample and norm-truncated covariance, the psi/rho truncation functions,
the truncation level ``lambda = sqrt(r(Sigma)/n) / (kappa^2 ||Sigma||)``,
the peaky/spread split of the directional error, the exact sparse
supremum ``f(k, [n])`` for small samples, and sign-aligned eigenvector
extraction with its ``T_j`` certificate.

Suprema over the unit sphere are taken over a :class:`DirectionSet`
(the eigenvectors of Sigma and Sigma-hat plus uniform directions). The
resulting values are lower bounds of the true supremum.

Examples:
    The two truncation functions::

        >>> psi_trunc(-3.0), rho_trunc(0.75)
        (-1.0, 0.5)

    Truncation level for kappa=1, ||Sigma||=2, r=4, n=100::

        >>> round(truncation_lambda(1.0, 2.0, 4.0, 100), 12)
        0.1
"""

import itertools
import logging
import math
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from matconc.lib.errors import EnumerationLimitError, MatrixError
from matconc.lib.matcore import (
    SymMatrix,
    aligned_distance,
    eig,
    op_norm,
    projector_distance,
    tj_operator,
)
from matconc.lib.seeding import Purpose, SeedSpec, rng_for

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 20
DEFAULT_DIRECTIONS = 1024
CERTIFICATE_FACTOR = 4.0 * math.sqrt(2.0)


# -- Truncation functions -----------------------------------------------------


def psi_trunc[T: (float, np.ndarray)](x: T) -> T:
    """x on [-1, 1], sign(x) outside."""
    if isinstance(x, np.ndarray):
        return np.clip(x, -1.0, 1.0)
    return float(min(1.0, max(-1.0, x)))


def rho_trunc[T: (float, np.ndarray)](x: T) -> T:
    """0 for x <= 1/2, 2x - 1 on (1/2, 1], 1 above."""
    if isinstance(x, np.ndarray):
        return np.clip(2.0 * x - 1.0, 0.0, 1.0)
    return float(min(1.0, max(0.0, 2.0 * x - 1.0)))


def truncation_lambda(kappa: float, sigma_norm: float, erank: float, n: int) -> float:
    """lambda = sqrt(r/n) / (kappa^2 ||Sigma||)."""
    if kappa <= 0 or sigma_norm <= 0 or erank <= 0 or n <= 0:
        raise ValueError("kappa, ||Sigma||, r and n must be positive")
    return math.sqrt(erank / n) / (kappa * kappa * sigma_norm)


class TruncationParams(BaseModel):
    """lambda, kappa and the vector-norm threshold tau."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(gt=0.0, allow_inf_nan=False, description="Truncation level lambda")
    kappa: float = Field(default=1.0, ge=1.0, description="Hypercontractivity ratio")
    tau: float = Field(default=math.inf, ge=0.0, description="Vector-norm threshold")


def default_tau(sigma_hat_norm: float, erank_hat: float, n: int) -> float:
    """sqrt(||Sigma-hat|| n / r-hat), a heuristic threshold for vector truncation."""
    if erank_hat <= 0:
        raise ValueError("effective rank must be positive")
    return math.sqrt(sigma_hat_norm * n / erank_hat)


# -- Covariance estimators ----------------------------------------------------


def _as_samples(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise MatrixError(f"expected a non-empty (n, d) sample array, got shape {x.shape}")
    return x


def sample_covariance(x: np.ndarray) -> SymMatrix:
    """(1/n) sum_j X_j X_j^T."""
    x = _as_samples(x)
    cov = x.T @ x / x.shape[0]
    return SymMatrix(entries=(cov + cov.T) / 2)


def truncated_covariance(x: np.ndarray, tau: float) -> SymMatrix:
    """(1/n) sum_j X_j X_j^T 1{||X_j|| <= tau}."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    x = _as_samples(x)
    keep = np.linalg.norm(x, axis=1) <= tau
    kept = x[keep]
    cov = kept.T @ kept / x.shape[0]
    return SymMatrix(entries=(cov + cov.T) / 2)


def directional_truncated_form(x: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    """(1/(lambda n)) sum_j psi(lambda <X_j, v>^2) for each direction row of ``v``."""
    x = _as_samples(x)
    proj = (x @ np.atleast_2d(v).T) ** 2
    return psi_trunc(lam * proj).mean(axis=0) / lam


# -- Directions ---------------------------------------------------------------


class DirectionSet(BaseModel):
    """Unit vectors approximating the sphere, one per row."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vectors: np.ndarray = Field(description="(m, d) array of unit rows")

    @model_validator(mode="after")
    def check_unit(self) -> Self:
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise MatrixError("direction set must be a non-empty (m, d) array")
        norms = np.linalg.norm(self.vectors, axis=1)
        if float(np.max(np.abs(norms - 1.0))) > 1e-10:
            raise MatrixError("direction set contains non-unit vectors")
        return self

    @classmethod
    def build(
        cls,
        dim: int,
        *,
        m: int = DEFAULT_DIRECTIONS,
        seed: SeedSpec,
        extra: list[np.ndarray] | None = None,
    ) -> "DirectionSet":
        """m uniform directions plus the columns of every matrix in ``extra``."""
        rng = rng_for(seed, Purpose.AUX)
        g = rng.standard_normal((m, dim))
        rows = [g / np.linalg.norm(g, axis=1, keepdims=True)]
        for basis in extra or []:
            cols = np.asarray(basis, dtype=np.float64).T
            rows.append(cols / np.linalg.norm(cols, axis=1, keepdims=True))
        return cls(vectors=np.vstack(rows))

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


def empirical_kappa(x: np.ndarray, dirs: DirectionSet, p: float) -> float:
    """max over directions of the empirical L_p / L_2 ratio of <X, v>."""
    x = _as_samples(x)
    proj = np.abs(x @ dirs.vectors.T)
    lp = np.mean(proj**p, axis=0) ** (1.0 / p)
    l2 = np.sqrt(np.mean(proj**2, axis=0))
    ratio = np.divide(lp, l2, out=np.ones_like(lp), where=l2 > 0)
    return float(max(1.0, ratio.max()))


# -- Peaky / spread -----------------------------------------------------------


class SpreadPeaky(BaseModel):
    """Per-direction terms of the peaky/spread split."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spread: np.ndarray = Field(description="|psi-truncated form - population form|")
    peaky: np.ndarray = Field(description="(1/n) sum <X_j,v>^2 1{lambda <X_j,v>^2 > 1}")
    count: np.ndarray = Field(description="|I_v|")
    error: np.ndarray = Field(description="|(1/n) sum <X_j,v>^2 - population form|")

    @property
    def max_count(self) -> int:
        """m = max_v |I_v| over the realised directions."""
        return int(self.count.max())

    def summary(self) -> dict[str, float]:
        """Suprema over the direction set, lower bounds of the sphere suprema."""
        return {
            "sup_spread": float(self.spread.max()),
            "sup_peaky": float(self.peaky.max()),
            "sup_error": float(self.error.max()),
            "max_count": float(self.max_count),
        }


def spread_peaky_eval(
    x: np.ndarray,
    params: TruncationParams,
    dirs: DirectionSet,
    population: np.ndarray,
) -> SpreadPeaky:
    """Evaluate the peaky/spread split along every direction.

    Args:
        x: Samples as rows.
        params: Truncation parameters; ``lam`` is used.
        dirs: Directions v.
        population: Sigma; the target quadratic form is <Sigma v, v>.
    """
    x = _as_samples(x)
    v = dirs.vectors
    proj = (x @ v.T) ** 2
    lam = params.lam
    target = np.einsum("md,de,me->m", v, population, v)
    big = lam * proj > 1.0
    psi_form = directional_truncated_form(x, v, lam)
    return SpreadPeaky(
        spread=np.abs(psi_form - target),
        peaky=np.where(big, proj, 0.0).mean(axis=0),
        count=big.sum(axis=0),
        error=np.abs(proj.mean(axis=0) - target),
    )


# -- Sparse supremum oracle ---------------------------------------------------


class SparseSup(BaseModel):
    """f(k, [n]) and a maximising support."""

    value: float
    support: tuple[int, ...]


def sparse_sup_f(x: np.ndarray, k: int) -> SparseSup:
    """f(k,[n]) = max over |J| <= k of the top eigenvalue of the Gram matrix of {X_j}_J.

    Exact by enumeration of all size-k subsets (the maximum over smaller
    subsets is never larger, by eigenvalue interlacing).

    Raises:
        EnumerationLimitError: If n exceeds the enumeration limit.
    """
    x = _as_samples(x)
    n = x.shape[0]
    if n > ENUMERATION_LIMIT:
        raise EnumerationLimitError(f"n={n} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}, got {k}")
    gram = x @ x.T
    best = -math.inf
    best_support: tuple[int, ...] = ()
    for batch in itertools.batched(itertools.combinations(range(n), k), 4096):
        idx = np.array(batch)
        blocks = gram[idx[:, :, None], idx[:, None, :]]
        tops = np.linalg.eigvalsh(blocks)[:, -1]
        pos = int(np.argmax(tops))
        if tops[pos] > best:
            best = float(tops[pos])
            best_support = tuple(int(i) for i in idx[pos])
    return SparseSup(value=max(best, 0.0), support=best_support)


def partial_sum_norm(x: np.ndarray, support: tuple[int, ...]) -> float:
    """||(1/n) sum_{j in J} X_j X_j^T||."""
    x = _as_samples(x)
    sub = x[list(support)]
    return op_norm(SymMatrix(entries=sub.T @ sub)) / x.shape[0]


# -- Eigenvectors -------------------------------------------------------------


class AlignedEigvec(BaseModel):
    """Sign-aligned eigenvector pair and its perturbation chain."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    u_hat: np.ndarray
    u: np.ndarray
    vector_distance: float = Field(description="||u_hat - u||_2")
    projector_distance: float = Field(description="||u_hat u_hat^T - u u^T||_F")
    certificate: float = Field(description="4 sqrt(2) ||T_j (Sigma_hat - Sigma) T_j||")

    @property
    def chain_holds(self) -> bool:
        slack = 1e-12
        return (
            self.vector_distance <= self.projector_distance + slack
            and self.projector_distance <= self.certificate + slack
        )


def aligned_eigvec(sigma_hat: SymMatrix, sigma: SymMatrix, j: int) -> AlignedEigvec:
    """j-th eigenvectors of Sigma-hat and Sigma with <u_hat, u> >= 0.

    Raises:
        GapDegeneracyError: If g_j(Sigma) is degenerate.
    """
    spectrum = eig(sigma)
    t = tj_operator(spectrum, j).entries
    u = spectrum.vector(j)
    u_hat = eig(sigma_hat).vector(j)
    if float(np.dot(u_hat, u)) < 0.0:
        u_hat = -u_hat
    diff = sigma_hat.entries - sigma.entries
    certificate = CERTIFICATE_FACTOR * op_norm(SymMatrix(entries=t @ diff @ t))
    return AlignedEigvec(
        u_hat=u_hat,
        u=u,
        vector_distance=aligned_distance(u_hat, u),
        projector_distance=projector_distance(u_hat, u),
        certificate=certificate,
    )
