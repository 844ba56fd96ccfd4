"""Closed-form bound evaluators.

Right-hand sides of the matrix Bernstein, Fuk-Nagaev, Rosenthal and
empirical-process inequalities for sums of independent self-adjoint
random matrices. Every unspecified absolute constant is the parameter
``K`` (default 1) so the Monte Carlo harness can fit it; published
constants (4 in Bernstein, 64/16/4 and 16/4/1 in the truncation
proposition, 1.72 in the subsampling comparison) are fixed.

Logarithms are natural and ``log(ep) = 1 + log p``.

Tail evaluators return the raw right-hand side, which may exceed 1;
:func:`clamp_probability` gives the value usable as a probability. Every
evaluator rejects arguments outside the range its inequality is stated
for with :class:`BoundDomainError`.

Examples:
    Matrix Bernstein with effective rank 10::

        >>> bi = BoundInput(sigma2=1.0, U=1.0, erank=10.0)
        >>> round(bernstein_tail(bi, 5.0), 3)
        0.368

    Rosenthal moment bound at p = 2::

        >>> bi = BoundInput(sigma2=1.0, erank=math.e, p=2.0, EM=1.0, EMp=2.0)
        >>> round(rosenthal_moment(bi), 3)
        5.085
"""

import math
from typing import Literal, NamedTuple

from pydantic import BaseModel, ConfigDict, Field

from matconc.lib.errors import BoundDomainError

BERNSTEIN_CONSTANT = 4.0
PROPOSITION_CONSTANTS = (64.0, 16.0, 4.0)
PROPOSITION_SYMMETRIC_CONSTANTS = (16.0, 4.0, 1.0)
MEDIAN_FACTOR = math.sqrt(2.0)

_FINITE_NONNEG = {"ge": 0.0, "allow_inf_nan": False}


class BoundInput(BaseModel):
    """Scalar inputs consumed by the matrix-sum bound evaluators."""

    model_config = ConfigDict(frozen=True)

    sigma2: float = Field(default=0.0, **_FINITE_NONNEG, description="sigma^2 = ||V_n^2||")
    sigmaU2: float = Field(default=0.0, **_FINITE_NONNEG, description="sigma_U^2, truncated variance")
    U: float = Field(default=0.0, **_FINITE_NONNEG, description="Truncation level")
    erank: float = Field(default=1.0, ge=1.0, allow_inf_nan=False, description="r(V_n^2) or r(A_n)")
    p: float = Field(default=2.0, ge=1.0, allow_inf_nan=False, description="Moment order")
    EM: float = Field(default=0.0, **_FINITE_NONNEG, description="E max_k ||W_k||")
    EMp: float = Field(default=0.0, **_FINITE_NONNEG, description="E max_k ||W_k||^p")
    psi1M: float = Field(default=0.0, **_FINITE_NONNEG, description="psi_1 norm of M")
    anorm: float = Field(default=0.0, **_FINITE_NONNEG, description="||A_n|| for PSD sums")
    K: float = Field(default=1.0, gt=0.0, allow_inf_nan=False, description="Absolute constant")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def sigmaU(self) -> float:
        return math.sqrt(self.sigmaU2)


class EmpProcInput(BaseModel):
    """Scalar inputs of the empirical-process bounds."""

    model_config = ConfigDict(frozen=True)

    EZ: float = Field(allow_inf_nan=False, description="E Z, expected supremum")
    sigmaStar: float = Field(default=0.0, **_FINITE_NONNEG, description="sigma_*")
    n: int = Field(default=1, ge=1, description="Sample size")
    U: float = Field(default=0.0, **_FINITE_NONNEG, description="Envelope bound")
    p: float = Field(default=2.0, ge=1.0, allow_inf_nan=False)
    EM: float = Field(default=0.0, **_FINITE_NONNEG)
    EMp: float = Field(default=0.0, **_FINITE_NONNEG)
    K: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)


class BousquetLevel(NamedTuple):
    """Deviation level exceeded with probability at most ``prob``."""

    threshold: float
    prob: float
    simplified: float


# -- Helpers ------------------------------------------------------------------


def clamp_probability(raw: float) -> float:
    """min(1, max(0, raw))."""
    return min(1.0, max(0.0, raw))


def log_ep(p: float) -> float:
    """log(e p) = 1 + log p."""
    return 1.0 + math.log(p)


def heavy_coefficient(p: float) -> float:
    """p / log(e p); equals 1 at p = 1."""
    return p / log_ep(p)


def moment_root(value: float, p: float) -> float:
    return value ** (1.0 / p) if value > 0.0 else 0.0


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise BoundDomainError(message)


def _check_probability(name: str, value: float) -> None:
    _require(0.0 <= value <= 1.0, f"{name}={value!r} is not a probability")


# -- Matrix Bernstein ---------------------------------------------------------


def bernstein_threshold(bi: BoundInput) -> float:
    """Smallest t where the Bernstein tail is stated: sigma + U/3."""
    return bi.sigma + bi.U / 3.0


def bernstein_tail(bi: BoundInput, t: float) -> float:
    """4 r exp[-(t^2/2) / (sigma^2 + tU/3)] for t >= sigma + U/3."""
    threshold = bernstein_threshold(bi)
    _require(t >= threshold, f"Bernstein tail needs t >= sigma + U/3 = {threshold:.6g}, got {t!r}")
    denom = bi.sigma2 + t * bi.U / 3.0
    if denom == 0.0:
        return 0.0 if t > 0.0 else BERNSTEIN_CONSTANT * bi.erank
    return BERNSTEIN_CONSTANT * bi.erank * math.exp(-(t * t / 2.0) / denom)


def bernstein_moment(bi: BoundInput) -> float:
    """K (sigma sqrt(q) + U q) with q = log(e r) v p."""
    q = max(math.log(math.e * bi.erank), bi.p)
    return bi.K * (bi.sigma * math.sqrt(q) + bi.U * q)


# -- Fuk-Nagaev ---------------------------------------------------------------


def proposition_threshold(bi: BoundInput, *, symmetric: bool, median_bound: float | None = None) -> float:
    """Smallest t for the truncation proposition.

    ``t/2 >= sigma_U v U/3``; non-symmetric sums also need ``t/2`` above
    the directional median of the sum, certified by ``sigma sqrt(2)``
    unless ``median_bound`` is given.
    """
    half = max(bi.sigmaU, bi.U / 3.0)
    if not symmetric:
        median = MEDIAN_FACTOR * bi.sigma if median_bound is None else median_bound
        half = max(half, median)
    return 2.0 * half


def prop_fuk_nagaev_rhs(
    bi: BoundInput,
    t: float,
    *,
    p_delta: float,
    p_sum: float,
    p_max: float,
    symmetric: bool,
    median_bound: float | None = None,
) -> float:
    """Right-hand side of the truncation proposition.

    Non-symmetric, bounding P(||S|| > 12t):
    ``64 r exp[-(t/2)^2/(sigma_U^2 + tU/6)] + 16 p_delta p_sum + 4 p_max``.
    Symmetric, bounding P(||S|| > 3t): constants 16, 4, 1.

    Args:
        bi: Inputs; ``sigmaU2``, ``U`` and ``erank`` are used.
        t: Level.
        p_delta: P(||sum eps_k W_k 1{||W_k|| > U}|| > t/2).
        p_sum: P(||sum eps_k W_k|| > t), or P(||sum W_k|| > t) when symmetric.
        p_max: P(max_k ||W_k|| > t).
        symmetric: Use the symmetric variant.
        median_bound: Certified bound on the directional median, overriding sigma sqrt(2).
    """
    for name, value in (("p_delta", p_delta), ("p_sum", p_sum), ("p_max", p_max)):
        _check_probability(name, value)
    threshold = proposition_threshold(bi, symmetric=symmetric, median_bound=median_bound)
    _require(t >= threshold, f"proposition needs t >= {threshold:.6g}, got {t!r}")
    c_exp, c_prod, c_max = PROPOSITION_SYMMETRIC_CONSTANTS if symmetric else PROPOSITION_CONSTANTS
    denom = bi.sigmaU2 + t * bi.U / 6.0
    exponential = math.exp(-((t / 2.0) ** 2) / denom) if denom > 0.0 else float(t <= 0.0)
    return c_exp * bi.erank * exponential + c_prod * p_delta * p_sum + c_max * p_max


def fuk_nagaev_threshold(bi: BoundInput) -> float:
    """2 (sigma v EM/3)."""
    return 2.0 * max(bi.sigma, bi.EM / 3.0)


def fuk_nagaev_tail(bi: BoundInput, t: float, p_max: float) -> float:
    """K (r exp[-(t/2)^2/(sigma^2 + 4t EM)] + p_max + ((p/log(ep))^p EM^p / t^p)^2).

    Bounds P(||S|| > 12t) for t >= 2(sigma v EM/3).
    """
    _check_probability("p_max", p_max)
    threshold = fuk_nagaev_threshold(bi)
    _require(t >= threshold and t > 0.0, f"Fuk-Nagaev tail needs t >= {threshold:.6g} and t > 0, got {t!r}")
    denom = bi.sigma2 + 4.0 * t * bi.EM
    exponential = math.exp(-((t / 2.0) ** 2) / denom) if denom > 0.0 else 0.0
    heavy = (heavy_coefficient(bi.p) ** bi.p * bi.EMp / t**bi.p) ** 2
    return bi.K * (bi.erank * exponential + p_max + heavy)


# -- Rosenthal ----------------------------------------------------------------


def rosenthal_q(erank: float, p: float) -> float:
    """q = log r v p."""
    return max(math.log(erank), p)


def rosenthal_moment(bi: BoundInput) -> float:
    """K (sigma sqrt(q) + q EM + (p/log(ep)) (EM^p)^{1/p}), q = log r v p."""
    q = rosenthal_q(bi.erank, bi.p)
    return bi.K * (
        bi.sigma * math.sqrt(q)
        + q * bi.EM
        + heavy_coefficient(bi.p) * moment_root(bi.EMp, bi.p)
    )


def rosenthal_psi1(bi: BoundInput) -> float:
    """K (sigma sqrt(q) + log(r) EM + p ||M||_psi1)."""
    q = rosenthal_q(bi.erank, bi.p)
    return bi.K * (bi.sigma * math.sqrt(q) + math.log(bi.erank) * bi.EM + bi.p * bi.psi1M)


def rosenthal_quantile(bi: BoundInput, q1: float, qp: float) -> float:
    """Quantile form K (sigma sqrt(q) + q Q_1 + Q_p + (E M^p)^{1/p}).

    ``q1`` and ``qp`` are the truncated-remainder quantiles at levels 1 and p.
    """
    _require(q1 >= 0.0 and qp >= 0.0, "quantiles must be nonnegative")
    q = rosenthal_q(bi.erank, bi.p)
    return bi.K * (bi.sigma * math.sqrt(q) + q * q1 + qp + moment_root(bi.EMp, bi.p))


def rosenthal_psd(bi: BoundInput, variant: Literal["moment", "psi1"] = "moment") -> float:
    """Rosenthal bound for sums of independent PSD matrices, A_n = sum E W_k.

    moment: ``K (||A_n|| + q EM + (p/log(ep)) (EM^p)^{1/p})``, q = log r(A_n) v p.
    psi1: ``K (||A_n|| + log(r(A_n)) EM + p ||M||_psi1)``.
    """
    if variant == "psi1":
        return bi.K * (bi.anorm + math.log(bi.erank) * bi.EM + bi.p * bi.psi1M)
    q = rosenthal_q(bi.erank, bi.p)
    return bi.K * (bi.anorm + q * bi.EM + heavy_coefficient(bi.p) * moment_root(bi.EMp, bi.p))


# -- Empirical processes ------------------------------------------------------


def empproc_level(ep: EmpProcInput, t: float) -> float:
    """24 (E Z + t), the deviation level the empirical-process tail controls."""
    return 24.0 * (ep.EZ + t)


def empproc_tail(ep: EmpProcInput, t: float, p_max: float) -> float:
    """K (exp(-t^2/(2 sigma_*^2 + 64 t EM)) + p_max + (p/log(ep))^{2p} (EM^p/t^p)^2).

    Bounds P(Z > empproc_level(t)) for t >= sqrt(2) sigma_*.
    """
    _check_probability("p_max", p_max)
    threshold = math.sqrt(2.0) * ep.sigmaStar
    _require(t >= threshold and t > 0.0, f"empirical-process tail needs t >= {threshold:.6g} and t > 0, got {t!r}")
    denom = 2.0 * ep.sigmaStar**2 + 64.0 * t * ep.EM
    exponential = math.exp(-(t * t) / denom) if denom > 0.0 else 0.0
    heavy = heavy_coefficient(ep.p) ** (2.0 * ep.p) * (ep.EMp / t**ep.p) ** 2
    return ep.K * (exponential + p_max + heavy)


def empproc_moment(ep: EmpProcInput) -> float:
    """K (E Z + sigma_* sqrt(p) + p EM + (p/log(ep)) (EM^p)^{1/p})."""
    return ep.K * (
        ep.EZ
        + ep.sigmaStar * math.sqrt(ep.p)
        + ep.p * ep.EM
        + heavy_coefficient(ep.p) * moment_root(ep.EMp, ep.p)
    )


def bousquet_threshold(ep: EmpProcInput, t: float) -> BousquetLevel:
    """Bousquet: P(Z >= EZ + sqrt(2tv) + tU/3) <= e^{-t}, v = sigma_*^2 + 2 EZ.

    Also returns the simplified level ``2 EZ + sigma_* sqrt(2t) + 4tU/3``.
    """
    _require(t >= 0.0, f"Bousquet needs t >= 0, got {t!r}")
    v = ep.sigmaStar**2 + 2.0 * ep.EZ
    _require(v >= 0.0, "sigma_*^2 + 2 EZ must be nonnegative")
    threshold = ep.EZ + math.sqrt(2.0 * t * v) + t * ep.U / 3.0
    simplified = 2.0 * ep.EZ + ep.sigmaStar * math.sqrt(2.0 * t) + 4.0 * t * ep.U / 3.0
    return BousquetLevel(threshold=threshold, prob=math.exp(-t), simplified=simplified)


# -- Tail combinators ---------------------------------------------------------


def hoffmann_jorgensen_rhs(p_t: float, p_max_s: float) -> float:
    """4 P(||S|| > t)^2 + P(max ||W_k|| > s), bounding P(||S|| > 2t + s)."""
    _check_probability("p_t", p_t)
    _check_probability("p_max_s", p_max_s)
    return 4.0 * p_t * p_t + p_max_s


def levy_lower(p_max_t: float) -> float:
    """P(max ||W_k|| > t) / 2, a lower bound of P(||S|| > t) for symmetric summands."""
    _check_probability("p_max_t", p_max_t)
    return 0.5 * p_max_t


# -- Covariance and eigenvector rates -----------------------------------------


def covariance_rate(
    sigma_norm: float,
    erank: float,
    n: int,
    max_norm_moment: float = 0.0,
    p: float = 4.0,
    K: float = 1.0,
) -> float:
    """K (||Sigma|| sqrt(r/n) + (E max_j ||X_j||^p)^{2/p} / n)."""
    _require(n >= 1 and erank >= 1.0 and sigma_norm >= 0.0, "invalid covariance rate inputs")
    heavy = max_norm_moment ** (2.0 / p) / n if max_norm_moment > 0.0 else 0.0
    return K * (sigma_norm * math.sqrt(erank / n) + heavy)


def davis_kahan_classic(sigma_norm: float, gap: float, erank: float, n: int, K: float = 1.0) -> float:
    """K (||Sigma|| / g_j) sqrt(r/n)."""
    _require(gap > 0.0 and n >= 1, "classic rate needs g_j > 0 and n >= 1")
    return K * sigma_norm / gap * math.sqrt(erank / n)


def davis_kahan_relative(
    lambda_j: float,
    gap: float,
    rel_rank: float,
    n: int,
    p: float | None = None,
    K: float = 1.0,
) -> float:
    """K (sqrt(lambda_j/g_j) sqrt(r_j/n) + r_j / n^{1-2/p}).

    The second term is dropped when ``p`` is None.
    """
    _require(gap > 0.0 and n >= 1 and lambda_j >= 0.0, "relative rate needs g_j > 0 and n >= 1")
    value = math.sqrt(lambda_j / gap) * math.sqrt(rel_rank / n)
    if p is not None:
        _require(p > 2.0, f"relative rate needs p > 2, got {p!r}")
        value += rel_rank / n ** (1.0 - 2.0 / p)
    return K * value
