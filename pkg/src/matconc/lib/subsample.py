"""Random column subsampling.

``R = diag(delta_1, ..., delta_d)`` with i.i.d. Bernoulli(delta) entries
keeps the columns ``B_k`` with ``delta_k = 1``. The quantities of interest
are ``||BR||^2 = ||sum_k delta_k B_k B_k^T||`` and the centered
``||BR - delta B||^2 = ||sum_k (delta_k - delta)^2 B_k B_k^T||``.

Bound evaluators:

- :func:`subsample_bound`: ``K (delta ||B||^2 + log(srank B) avg)`` and its
  centered form multiplied by ``1 - delta``, where ``avg`` is the mean of
  the ``floor(1/delta)`` largest squared column norms
- :func:`lemma_max_bound`: the bound on ``E max_k delta_k ||B_k||^2``
- :func:`prior_bound_sampling` and :func:`prior_bound_tropp`: the two
  earlier bounds, for comparison tables

Examples:
    Exact expectation for the identity, where ``||BR|| = 1`` iff any
    column is kept::

        >>> inp = SubsampleInput(B=RectMatrix(entries=np.eye(5)), delta=0.3,
        ...                      seed=SeedSpec(master_seed=0))
        >>> round(exact_subsample_moments(inp).plain, 5)
        0.83193

    Column order statistics::

        >>> stats = column_order_stats(RectMatrix(entries=np.diag([3.0, 2.0, 1.0])), 0.5)
        >>> stats.count, stats.average
        (2, 6.5)
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from matconc.lib.errors import EnumerationLimitError, MatrixError
from matconc.lib.matcore import RectMatrix, SymMatrix, op_norm, spectral_norm, stable_rank
from matconc.lib.metrics import tracked
from matconc.lib.seeding import Purpose, SeedSpec, map_chunks, rng_for

logger = logging.getLogger(__name__)

EXACT_COLUMN_LIMIT = 15
TROPP_CONSTANT = 1.72


class SubsampleInput(BaseModel):
    """B, the keep probability delta and the seed of the masks."""

    model_config = ConfigDict(frozen=True)

    B: RectMatrix
    delta: float = Field(gt=0.0, lt=1.0, description="Keep probability")
    seed: SeedSpec

    @property
    def columns(self) -> int:
        return self.B.cols


class SubsampledNorms(BaseModel):
    """Squared norms of one subsampled matrix, directly and via the rank-one sums."""

    plain: float = Field(description="||BR||^2")
    plain_identity: float = Field(description="||sum delta_k B_k B_k^T||")
    centered: float = Field(description="||BR - delta B||^2")
    centered_identity: float = Field(description="||sum (delta_k - delta)^2 B_k B_k^T||")


class SubsampleMoments(BaseModel):
    """E ||BR||^2 and E ||BR - delta B||^2, exact or estimated."""

    plain: float
    centered: float
    plain_se: float = 0.0
    centered_se: float = 0.0
    max_column: float = Field(default=math.nan, description="E max_k delta_k ||B_k||^2")
    max_column_se: float = 0.0
    max_column_centered: float = Field(default=math.nan, description="E max_k (delta_k - delta)^2 ||B_k||^2")
    max_column_centered_se: float = 0.0
    trials: int = Field(default=0, description="0 for exact enumeration")


class ColumnOrderStats(BaseModel):
    """Squared column norms sorted descending and their head average."""

    squared_norms: list[float]
    count: int = Field(description="floor(1/delta)")
    average: float = Field(description="Mean of the `count` largest squared norms")


# -- Masks and norms ----------------------------------------------------------


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")


def sample_mask(d: int, delta: float, seed: SeedSpec) -> np.ndarray:
    """d independent Bernoulli(delta) indicators as an int8 array."""
    _check_delta(delta)
    if d < 1:
        raise ValueError(f"mask length must be positive, got {d}")
    return (rng_for(seed, Purpose.DRAW).random(d) < delta).astype(np.int8)


def _gram_norm(b: np.ndarray, weights: np.ndarray) -> float:
    """||sum_k w_k B_k B_k^T|| for nonnegative weights."""
    g = (b * weights) @ b.T
    return op_norm(SymMatrix(entries=(g + g.T) / 2))


def subsampled_norms(inp: SubsampleInput, mask: np.ndarray) -> SubsampledNorms:
    """Evaluate both squared norms for one mask, directly and through the identity."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (inp.columns,):
        raise MatrixError(f"mask has shape {mask.shape}, B has {inp.columns} columns")
    b = inp.B.entries
    centered_weights = mask - inp.delta
    return SubsampledNorms(
        plain=spectral_norm(RectMatrix(entries=b * mask)) ** 2,
        plain_identity=_gram_norm(b, mask),
        centered=spectral_norm(RectMatrix(entries=b * centered_weights)) ** 2,
        centered_identity=_gram_norm(b, centered_weights**2),
    )


# -- Expectations -------------------------------------------------------------


def exact_subsample_moments(inp: SubsampleInput) -> SubsampleMoments:
    """E ||BR||^2 and E ||BR - delta B||^2 by enumerating all 2^d masks.

    Raises:
        EnumerationLimitError: If B has more than 15 columns.
    """
    d = inp.columns
    if d > EXACT_COLUMN_LIMIT:
        raise EnumerationLimitError(f"{d} columns exceed the enumeration limit {EXACT_COLUMN_LIMIT}")
    b = inp.B.entries
    delta = inp.delta
    gram = b.T @ b
    masks = ((np.arange(2**d)[:, None] >> np.arange(d)) & 1).astype(np.float64)
    kept = masks.sum(axis=1)
    probs = delta**kept * (1.0 - delta) ** (d - kept)

    def top(weights: np.ndarray) -> np.ndarray:
        # ||B D||^2 = lambda_max(D B^T B D)
        stack = weights[:, :, None] * gram * weights[:, None, :]
        return np.linalg.eigvalsh(stack)[:, -1].clip(min=0.0)

    col_sq = np.sum(b * b, axis=0)
    return SubsampleMoments(
        plain=float(probs @ top(masks)),
        centered=float(probs @ top(masks - delta)),
        max_column=float(probs @ (masks * col_sq).max(axis=1)),
        max_column_centered=float(probs @ ((masks - delta) ** 2 * col_sq).max(axis=1)),
    )


@tracked("subsample_masks", trials_arg="trials")
def mc_subsample_moments(
    inp: SubsampleInput,
    trials: int,
    *,
    threads: int = 1,
    chunk: int = 1024,
) -> SubsampleMoments:
    """Monte Carlo estimates of the subsampling moments with standard errors.

    Mask ``i`` is drawn from ``inp.seed.stream(i)``.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    b = inp.B.entries
    gram = b.T @ b
    col_sq = np.sum(b * b, axis=0)
    d = inp.columns

    def run(indices: range) -> np.ndarray:
        masks = np.stack([sample_mask(d, inp.delta, inp.seed.stream(i)) for i in indices]).astype(np.float64)
        out = np.empty((len(indices), 4))
        for col, weights in enumerate((masks, masks - inp.delta)):
            stack = weights[:, :, None] * gram * weights[:, None, :]
            out[:, col] = np.linalg.eigvalsh(stack)[:, -1].clip(min=0.0)
        out[:, 2] = (masks * col_sq).max(axis=1)
        out[:, 3] = ((masks - inp.delta) ** 2 * col_sq).max(axis=1)
        return out

    values = np.vstack(map_chunks(run, trials=trials, chunk=chunk, threads=threads))
    means = values.mean(axis=0)
    ses = values.std(axis=0, ddof=1) / math.sqrt(trials)
    logger.debug("Subsampling moments from %d masks: %s", trials, means)
    return SubsampleMoments(
        plain=float(means[0]),
        centered=float(means[1]),
        plain_se=float(ses[0]),
        centered_se=float(ses[1]),
        max_column=float(means[2]),
        max_column_se=float(ses[2]),
        max_column_centered=float(means[3]),
        max_column_centered_se=float(ses[3]),
        trials=trials,
    )


# -- Bounds -------------------------------------------------------------------


def column_order_stats(b: RectMatrix, delta: float) -> ColumnOrderStats:
    """Sorted squared column norms and the mean of the floor(1/delta) largest.

    Missing columns count as zero when floor(1/delta) exceeds the column count.
    """
    _check_delta(delta)
    sq = np.sort(np.sum(b.entries**2, axis=0))[::-1]
    count = math.floor(1.0 / delta)
    head = np.zeros(count)
    take = min(count, sq.size)
    head[:take] = sq[:take]
    return ColumnOrderStats(squared_norms=[float(x) for x in sq], count=count, average=float(head.mean()))


def lemma_max_bound(b: RectMatrix, delta: float, *, centered: bool = False) -> float:
    """(2/floor(1/delta)) sum of the top squared column norms; times (1 - delta) when centered."""
    stats = column_order_stats(b, delta)
    bound = 2.0 * stats.average
    return (1.0 - delta) * bound if centered else bound


def subsample_bound(
    inp: SubsampleInput,
    K: float = 1.0,
    variant: Literal["plain", "centered"] = "plain",
) -> float:
    """K (delta ||B||^2 + log(srank B) avg), times (1 - delta) for ``centered``.

    The logarithm is floored at 0, so a rank-one B gives ``K delta ||B||^2``.

    Raises:
        ZeroMatrixError: If B is zero.
    """
    srank = stable_rank(inp.B)
    stats = column_order_stats(inp.B, inp.delta)
    value = K * (inp.delta * spectral_norm(inp.B) ** 2 + max(0.0, math.log(srank)) * stats.average)
    return (1.0 - inp.delta) * value if variant == "centered" else value


def prior_bound_sampling(inp: SubsampleInput, K: float = 1.0) -> float:
    """K (delta ||B||^2 + log(d delta) avg) with d the column count.

    The sample-size symbol of the original statement is read as the number
    of columns; the logarithm is floored at 0.
    """
    stats = column_order_stats(inp.B, inp.delta)
    log_term = max(0.0, math.log(inp.columns * inp.delta))
    return K * (inp.delta * spectral_norm(inp.B) ** 2 + log_term * stats.average)


def prior_bound_tropp(inp: SubsampleInput) -> float:
    """1.72 (delta ||B||^2 + log(2 srank B) ||B_(1)||^2).

    The stable rank is at least 1, so the logarithm is at least log 2 and
    needs no floor.
    """
    srank = stable_rank(inp.B)
    stats = column_order_stats(inp.B, inp.delta)
    return TROPP_CONSTANT * (
        inp.delta * spectral_norm(inp.B) ** 2 + math.log(2.0 * srank) * stats.squared_norms[0]
    )
