"""Real symmetric matrix algebra.

Dense real symmetric matrices with the norms, spectra and rank notions
used by every bound in the package: operator norm, effective rank
``trace(A)/||A||``, stable rank ``||B||_F^2/||B||^2``, the Hermitian
dilation of a rectangular matrix, spectral gaps, the relative rank of an
eigenvalue and the ``T_j`` operator that turns eigenvector perturbation
into an operator-norm problem.

Indices ``j`` are 1-based and refer to eigenvalues sorted descending,
``lambda_1 >= ... >= lambda_d``.

Examples:
    Norms and ranks of a diagonal matrix::

        >>> a = SymMatrix(entries=np.diag([2.0, 1.0, 1.0]))
        >>> op_norm(a)
        2.0
        >>> effective_rank(a)
        2.0

    Relative rank of the top eigenvalue::

        >>> spectrum = eig(SymMatrix(entries=np.diag([4.0, 1.0])))
        >>> gap, rank = relative_rank(spectrum, 1)
        >>> gap, round(rank, 6)
        (3.0, 1.666667)

    Projector distance between orthogonal unit vectors::

        >>> projector_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        1.4142135623730951
"""

import logging
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from matconc.lib.errors import (
    ConvergenceError,
    GapDegeneracyError,
    MatrixError,
    NotPSDError,
    NotUnitError,
    ZeroMatrixError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
GAP_TOLERANCE = 1e-12
UNIT_TOLERANCE = 1e-10


# -- Types --------------------------------------------------------------------


class SymMatrix(BaseModel):
    """Dense real symmetric matrix. The upper triangle is authoritative."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray = Field(description="dim x dim float64 array")

    @field_validator("entries", mode="before")
    @classmethod
    def symmetrize(cls, value: object) -> np.ndarray:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise MatrixError(f"expected a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MatrixError("matrix has non-finite entries")
        scale = float(np.max(np.abs(arr)))
        asymmetry = float(np.max(np.abs(arr - arr.T)))
        if asymmetry > SYMMETRY_TOLERANCE * scale:
            raise MatrixError(
                f"matrix is not symmetric: max |A - A^T| = {asymmetry:.3e}"
            )
        upper = np.triu(arr)
        return upper + np.triu(arr, k=1).T

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])


class RectMatrix(BaseModel):
    """Dense real rectangular matrix."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray = Field(description="rows x cols float64 array")

    @field_validator("entries", mode="before")
    @classmethod
    def check_shape(cls, value: object) -> np.ndarray:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or 0 in arr.shape:
            raise MatrixError(f"expected a non-empty 2-d matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MatrixError("matrix has non-finite entries")
        return arr

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])


class Spectrum(BaseModel):
    """Descending eigenvalues with orthonormal eigenvectors as columns."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray = Field(description="Eigenvalues, descending")
    eigenvectors: np.ndarray = Field(description="Orthonormal eigenvectors as columns")

    @model_validator(mode="after")
    def check_invariants(self) -> Self:
        lam = self.eigenvalues
        vecs = self.eigenvectors
        if lam.ndim != 1 or vecs.shape != (lam.size, lam.size):
            raise MatrixError("eigenvector matrix must be square and match eigenvalues")
        if np.any(np.diff(lam) > 0):
            raise MatrixError("eigenvalues must be sorted descending")
        gram_error = float(np.max(np.abs(vecs.T @ vecs - np.eye(lam.size))))
        if gram_error > 1e-8 * lam.size:
            raise MatrixError(f"eigenvectors are not orthonormal (error {gram_error:.3e})")
        return self

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    def vector(self, j: int) -> np.ndarray:
        """Eigenvector u_j (1-based)."""
        return self.eigenvectors[:, _index(j, self.dim)]

    def reconstruct(self) -> np.ndarray:
        """Sum of lambda_j u_j u_j^T."""
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.T


# -- Norms and spectra --------------------------------------------------------


def _eigvalsh(arr: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(arr)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"symmetric eigensolver did not converge: {e}") from e


def op_norm(a: SymMatrix) -> float:
    """Largest absolute eigenvalue."""
    return float(np.max(np.abs(_eigvalsh(a.entries))))


def batch_op_norm(stack: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of symmetric matrices with shape (..., d, d)."""
    if stack.shape[-1] == 1:
        return np.abs(stack[..., 0, 0])
    return np.max(np.abs(_eigvalsh(stack)), axis=-1)


def eig(a: SymMatrix) -> Spectrum:
    """Eigendecomposition with eigenvalues sorted descending."""
    try:
        w, v = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"symmetric eigensolver did not converge: {e}") from e
    order = np.argsort(-w, kind="stable")
    return Spectrum(eigenvalues=w[order], eigenvectors=v[:, order])


def psd_eigenvalues(a: SymMatrix) -> np.ndarray:
    """Eigenvalues of a PSD matrix, round-off negatives clamped to zero.

    Raises:
        ZeroMatrixError: If ``a`` is the zero matrix.
        NotPSDError: If an eigenvalue lies below ``-1e-10 * ||a||``.
    """
    w = _eigvalsh(a.entries)
    norm = float(np.max(np.abs(w)))
    if norm == 0.0:
        raise ZeroMatrixError("matrix is zero")
    if float(w.min()) < -PSD_TOLERANCE * norm:
        raise NotPSDError(f"matrix is not PSD: smallest eigenvalue {w.min():.3e}")
    return np.clip(w, 0.0, None)


def effective_rank(a: SymMatrix) -> float:
    """trace(A) / ||A|| for PSD A, a value in [1, dim]."""
    w = psd_eigenvalues(a)
    return float(w.sum() / w.max())


def stable_rank(b: RectMatrix) -> float:
    """||B||_F^2 / ||B||^2, a value in [1, min(rows, cols)]."""
    s = np.linalg.svd(b.entries, compute_uv=False)
    if float(s[0]) == 0.0:
        raise ZeroMatrixError("stable rank of the zero matrix is undefined")
    return float(np.sum(s**2) / s[0] ** 2)


def spectral_norm(b: RectMatrix) -> float:
    """Largest singular value."""
    return float(np.linalg.svd(b.entries, compute_uv=False)[0])


def psd_sqrt(a: SymMatrix) -> SymMatrix:
    """Symmetric square root of a PSD matrix."""
    spectrum = eig(a)
    lam = spectrum.eigenvalues
    scale = float(np.max(np.abs(lam)))
    if float(lam.min()) < -PSD_TOLERANCE * scale:
        raise NotPSDError(f"matrix is not PSD: smallest eigenvalue {lam.min():.3e}")
    vecs = spectrum.eigenvectors
    root = (vecs * np.sqrt(np.clip(lam, 0.0, None))) @ vecs.T
    return SymMatrix(entries=(root + root.T) / 2)


def hermitian_dilation(w: RectMatrix) -> SymMatrix:
    """Block matrix [[0, W], [W^T, 0]] of dimension rows + cols."""
    arr = w.entries
    top = np.hstack([np.zeros((w.rows, w.rows)), arr])
    bottom = np.hstack([arr.T, np.zeros((w.cols, w.cols))])
    return SymMatrix(entries=np.vstack([top, bottom]))


# -- Gaps and eigenvector operators -------------------------------------------


def _index(j: int, dim: int) -> int:
    if not 1 <= j <= dim:
        raise IndexError(f"eigenvalue index {j} outside 1..{dim}")
    return j - 1


def spectral_gap(spectrum: Spectrum, j: int) -> float:
    """Distance g_j from lambda_j to its nearest other eigenvalue.

    One-sided at the edges: ``g_1 = lambda_1 - lambda_2`` and
    ``g_d = lambda_{d-1} - lambda_d``.

    Raises:
        GapDegeneracyError: If ``d == 1`` or ``g_j <= 1e-12 * max|lambda|``.
    """
    lam = spectrum.eigenvalues
    d = lam.size
    i = _index(j, d)
    if d == 1:
        raise GapDegeneracyError("spectral gap is undefined in dimension 1")
    if i == 0:
        gap = lam[0] - lam[1]
    elif i == d - 1:
        gap = lam[d - 2] - lam[d - 1]
    else:
        gap = min(lam[i - 1] - lam[i], lam[i] - lam[i + 1])
    scale = float(np.max(np.abs(lam)))
    if gap <= 0.0 or gap <= GAP_TOLERANCE * scale:
        raise GapDegeneracyError(f"g_{j} = {gap:.3e} is degenerate")
    return float(gap)


def relative_rank(spectrum: Spectrum, j: int) -> tuple[float, float]:
    """Gap g_j and relative rank r_j = sum_{i != j} lambda_i/|lambda_i - lambda_j| + lambda_j/g_j."""
    gap = spectral_gap(spectrum, j)
    lam = spectrum.eigenvalues
    i = j - 1
    others = np.delete(lam, i)
    rank = float(np.sum(others / np.abs(others - lam[i])) + lam[i] / gap)
    return gap, rank


def tj_operator(spectrum: Spectrum, j: int) -> SymMatrix:
    """T_j = sum_{i != j} |lambda_i - lambda_j|^{-1/2} u_i u_i^T + g_j^{-1/2} u_j u_j^T."""
    gap = spectral_gap(spectrum, j)
    lam = spectrum.eigenvalues
    i = j - 1
    weights = np.empty_like(lam)
    mask = np.arange(lam.size) != i
    weights[mask] = np.abs(lam[mask] - lam[i]) ** -0.5
    weights[i] = gap**-0.5
    vecs = spectrum.eigenvectors
    t = (vecs * weights) @ vecs.T
    return SymMatrix(entries=(t + t.T) / 2)


def tj_norm_formula(spectrum: Spectrum, j: int) -> float:
    """Closed form of ||T_j Sigma T_j||: max_{i != j} lambda_i/|lambda_i - lambda_j| v lambda_j/g_j."""
    gap = spectral_gap(spectrum, j)
    lam = spectrum.eigenvalues
    i = j - 1
    others = np.delete(lam, i)
    return float(max(np.max(np.abs(others / np.abs(others - lam[i]))), abs(lam[i] / gap)))


# -- Unit vectors -------------------------------------------------------------


def _check_unit(*vectors: np.ndarray) -> None:
    for v in vectors:
        if v.ndim != 1:
            raise NotUnitError(f"expected a vector, got shape {v.shape}")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise NotUnitError(f"vector has norm {norm!r}, expected 1")
    if len({v.size for v in vectors}) > 1:
        raise NotUnitError("vectors have different lengths")


def projector_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Frobenius distance ||uu^T - vv^T||_F = sqrt(2(1 - <u,v>^2))."""
    _check_unit(u, v)
    cos = float(np.dot(u, v))
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - cos * cos))))


def aligned_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Sign-aligned distance ||u - sign(<u,v>) v||_2, never above projector_distance."""
    _check_unit(u, v)
    sign = 1.0 if float(np.dot(u, v)) >= 0.0 else -1.0
    return float(np.linalg.norm(u - sign * v))
