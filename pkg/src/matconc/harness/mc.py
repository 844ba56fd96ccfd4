"""Monte Carlo estimation for sums of independent random matrices.

:func:`simulate` draws ``trials`` independent copies of ``(W_1, ..., W_n)``
and records, per trial, ``||sum W_k||``, ``||sum eps_k W_k||``,
``M = max ||W_k||`` and, for a truncation level ``U``, the norms of the
truncated and remainder parts of the symmetrized sum. Every estimator in
this module is a function of that table, so statistics computed from one
run share their trials.

Trial ``i`` draws its matrices from ``seed.stream(i)`` (purpose DRAW) and
its signs from the same stream with purpose SIGNS. Tables are therefore
identical for any thread count or chunk size.

Checks of the form "empirical <= bound" allow ``slack`` standard errors.

Examples:
    The psi_1 norm of a constant is c / log 2::

        >>> round(estimate_psi1(np.full(10, 3.0)), 6)
        4.328085

    Log-log slope of an exact power law::

        >>> fit = fit_loglog_slope([1, 4, 16, 64], [1.0, 0.5, 0.25, 0.125])
        >>> round(fit.slope, 12)
        -0.5
"""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, special, stats

from matconc.harness.models import FitResult, MomentEstimate, SlopeFit, TailCurve
from matconc.lib import bounds
from matconc.lib.errors import BoundDomainError, ConfigError, ResolutionError
from matconc.lib.matcore import batch_op_norm
from matconc.lib.metrics import tracked
from matconc.lib.samplers import Ensemble
from matconc.lib.seeding import Purpose, SeedSpec, map_chunks, rademacher, rng_for

logger = logging.getLogger(__name__)

MIN_TAIL_TRIALS = 100
QUANTILE_RESOLUTION = 100


# -- Trial tables -------------------------------------------------------------


class TrialTable(BaseModel):
    """Per-trial norms of one simulation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sum_norm: np.ndarray = Field(description="||sum W_k||")
    max_norm: np.ndarray = Field(description="M = max ||W_k||")
    sym_norm: np.ndarray | None = Field(default=None, description="||sum eps_k W_k||")
    trunc_norm: np.ndarray | None = Field(default=None, description="||sum eps_k W_k 1{||W_k|| <= U}||")
    delta_norm: np.ndarray | None = Field(default=None, description="||sum eps_k W_k 1{||W_k|| > U}||")
    quad_forms: np.ndarray | None = Field(default=None, description="<S v, v> per trial and direction")
    level: float = math.inf

    @property
    def trials(self) -> int:
        return int(self.sum_norm.size)

    def require(self, name: str) -> np.ndarray:
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f"simulation did not record {name}")
        return value


def _run_chunk(
    ensemble: Ensemble,
    seed: SeedSpec,
    indices: range,
    *,
    level: float,
    symmetrize: bool,
    directions: np.ndarray | None,
) -> dict[str, np.ndarray]:
    sums, syms, truncs, deltas = [], [], [], []
    max_norm = np.empty(len(indices))
    quad = np.empty((len(indices), directions.shape[0])) if directions is not None else None
    for row, i in enumerate(indices):
        trial = seed.stream(i)
        summands = ensemble.draw_summands(trial)
        n = summands.norms.size
        s = summands.combine(np.ones(n))
        sums.append(s)
        max_norm[row] = float(summands.norms.max())
        if quad is not None:
            quad[row] = np.einsum("md,de,me->m", directions, s, directions)
        if symmetrize:
            eps = rademacher(rng_for(trial, Purpose.SIGNS), n)
            syms.append(summands.combine(eps))
            if math.isfinite(level):
                big = summands.norms > level
                truncs.append(summands.combine(np.where(big, 0.0, eps)))
                deltas.append(summands.combine(np.where(big, eps, 0.0)))
    out = {"sum_norm": batch_op_norm(np.stack(sums)), "max_norm": max_norm}
    if syms:
        out["sym_norm"] = batch_op_norm(np.stack(syms))
    if truncs:
        out["trunc_norm"] = batch_op_norm(np.stack(truncs))
        out["delta_norm"] = batch_op_norm(np.stack(deltas))
    if quad is not None:
        out["quad_forms"] = quad
    return out


@tracked("simulate", trials_arg="trials")
def simulate(
    ensemble: Ensemble,
    trials: int,
    seed: SeedSpec,
    *,
    level: float = math.inf,
    symmetrize: bool = True,
    directions: np.ndarray | None = None,
    threads: int = 1,
    chunk: int = 256,
    offset: int = 0,
) -> TrialTable:
    """Simulate ``trials`` independent sums.

    Args:
        ensemble: Law of the summands.
        trials: Number of trials.
        seed: Master seed; trial ``i`` uses stream ``offset + i``.
        level: Truncation level U; the split norms are recorded when finite.
        symmetrize: Record the Rademacher-weighted sums.
        directions: Optional (m, d) unit rows; records ``<S v, v>``.
        threads: Worker threads.
        chunk: Trials per work unit.
        offset: First stream index, for disjoint trial sets.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if level < 0:
        raise ValueError(f"truncation level must be nonnegative, got {level}")
    logger.debug("Simulating %d trials of %s (level=%g)", trials, ensemble.kind, level)
    parts = map_chunks(
        lambda r: _run_chunk(ensemble, seed, r, level=level, symmetrize=symmetrize, directions=directions),
        trials=trials,
        chunk=chunk,
        threads=threads,
        offset=offset,
    )
    merged = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    return TrialTable(level=level, **merged)


# -- Tails --------------------------------------------------------------------


def exceedance(samples: np.ndarray, t: float) -> tuple[float, float]:
    """Frequency of samples > t and its binomial standard error."""
    n = samples.size
    p = float(np.count_nonzero(samples > t)) / n
    return p, math.sqrt(p * (1.0 - p) / n)


def tail_curve(
    samples: np.ndarray,
    t_grid: Sequence[float],
    bound: Callable[[float], float] | None = None,
    *,
    scale: float = 1.0,
) -> TailCurve:
    """Frequencies of ``samples > scale * t`` on ``t_grid`` paired with ``bound(t)``.

    ``bound`` may raise :class:`BoundDomainError`; such points get nan.
    """
    if not len(t_grid):
        raise ValueError("t_grid must not be empty")
    empirical, se, raw = [], [], []
    for t in t_grid:
        p, s = exceedance(samples, scale * t)
        empirical.append(p)
        se.append(s)
        if bound is None:
            raw.append(math.nan)
            continue
        try:
            raw.append(float(bound(t)))
        except BoundDomainError:
            raw.append(math.nan)
    clamped = [bounds.clamp_probability(b) if not math.isnan(b) else math.nan for b in raw]
    return TailCurve(
        t_grid=[float(t) for t in t_grid],
        empirical=empirical,
        std_err=se,
        bound_raw=raw,
        bound_clamped=clamped,
        trials=int(samples.size),
    )


def estimate_tail(
    ensemble: Ensemble,
    t_grid: Sequence[float],
    trials: int,
    seed: SeedSpec,
    *,
    bound: Callable[[float], float] | None = None,
    threads: int = 1,
    chunk: int = 256,
) -> TailCurve:
    """Estimate P(||sum W_k|| > t) on ``t_grid``.

    Raises:
        ResolutionError: If ``trials`` is below 100.
    """
    if trials < MIN_TAIL_TRIALS:
        raise ResolutionError(f"tail estimation needs at least {MIN_TAIL_TRIALS} trials, got {trials}")
    table = simulate(ensemble, trials, seed, symmetrize=False, threads=threads, chunk=chunk)
    return tail_curve(table.sum_norm, t_grid, bound)


# -- Moments ------------------------------------------------------------------


def moment_of(samples: np.ndarray, p: float) -> tuple[float, float]:
    """(mean samples^p)^{1/p} and its delta-method standard error."""
    if p < 1.0:
        raise ValueError(f"moment order must be at least 1, got {p}")
    powered = samples**p
    mean = float(powered.mean())
    if mean == 0.0:
        return 0.0, 0.0
    se_mean = float(powered.std(ddof=1)) / math.sqrt(samples.size) if samples.size > 1 else 0.0
    value = mean ** (1.0 / p)
    return value, value / (p * mean) * se_mean


def moment_from_table(table: TrialTable, p: float, column: str = "sum_norm") -> MomentEstimate:
    samples = table.require(column)
    value, se = moment_of(samples, p)
    m = table.max_norm
    return MomentEstimate(
        p=p,
        value=value,
        std_err=se,
        trials=table.trials,
        EM=float(m.mean()),
        EMp=float((m**p).mean()),
        median=float(np.median(samples)),
    )


def estimate_moment(
    ensemble: Ensemble,
    p: float,
    trials: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    chunk: int = 256,
) -> MomentEstimate:
    """Plug-in (E ||sum W_k||^p)^{1/p} with E M, E M^p and the median of ||S||."""
    table = simulate(ensemble, trials, seed, symmetrize=False, threads=threads, chunk=chunk)
    return moment_from_table(table, p)


def estimate_psi1(samples: Sequence[float] | np.ndarray) -> float:
    """Empirical psi_1 norm: the r solving mean exp(|Z|/r) = 2.

    Bisection on ``[max/(log 2 + log N), max/log 2]``, which brackets the
    root; returns inf for non-finite samples.
    """
    x = np.abs(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise ValueError("psi_1 needs at least one sample")
    if not np.all(np.isfinite(x)):
        return math.inf
    top = float(x.max())
    if top == 0.0:
        return 0.0
    log_target = math.log(2.0) + math.log(x.size)

    def excess(r: float) -> float:
        return float(special.logsumexp(x / r)) - log_target

    lo, hi = top / (math.log(2.0) + math.log(x.size)), top / math.log(2.0)
    if excess(hi) >= 0.0:
        return hi
    if excess(lo) <= 0.0:
        return lo
    return float(optimize.bisect(excess, lo, hi, rtol=1e-9, xtol=1e-15 * hi))


# -- Quantiles ----------------------------------------------------------------


def quantile_level(p: float) -> float:
    """(1/8) 3^{-p}."""
    return 3.0**-p / 8.0


def quantile_Qp(delta_norms: np.ndarray, p: float) -> float:
    """Empirical Q_p = inf{s > 0: P(||sum Delta_k|| > s/2) <= (1/8) 3^{-p}}.

    Type-1 order statistic: twice the (m+1)-th largest value, m = floor(alpha N).

    Raises:
        ResolutionError: If fewer than 100 exceedances are expected at the level.
    """
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    alpha = quantile_level(p)
    n = delta_norms.size
    if n * alpha < QUANTILE_RESOLUTION:
        needed = math.ceil(QUANTILE_RESOLUTION / alpha)
        raise ResolutionError(f"Q_{p:g} needs at least {needed} trials, got {n}")
    m = math.floor(alpha * n)
    ordered = np.sort(delta_norms)[::-1]
    return 2.0 * float(ordered[m])


def estimate_Qp(
    ensemble: Ensemble,
    U: float,
    p: float,
    trials: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    chunk: int = 256,
) -> float:
    """Q_p of the remainder ``Delta_k = eps_k W_k 1{||W_k|| > U}``."""
    alpha = quantile_level(p)
    if trials * alpha < QUANTILE_RESOLUTION:
        raise ResolutionError(f"Q_{p:g} needs at least {math.ceil(QUANTILE_RESOLUTION / alpha)} trials")
    table = simulate(ensemble, trials, seed, level=U, threads=threads, chunk=chunk)
    return quantile_Qp(table.require("delta_norm"), p)


# -- Fitting ------------------------------------------------------------------


def fit_constant(
    empirical: Sequence[float],
    bound: Sequence[float],
    points: Sequence[float] | None = None,
) -> FitResult:
    """K* = max over the grid of empirical / bound.

    Points with nan bounds are skipped. A nonpositive bound against a positive
    empirical value gives an explicit infinite fit.
    """
    if len(empirical) != len(bound):
        raise ValueError("empirical and bound must have the same length")
    k_star, argmax, used = 0.0, None, 0
    for i, (e, b) in enumerate(zip(empirical, bound)):
        if math.isnan(b):
            continue
        used += 1
        if e <= 0.0:
            continue
        if b <= 0.0:
            return FitResult(
                k_star=math.inf,
                argmax_index=i,
                argmax_point=None if points is None else float(points[i]),
                infinite=True,
                margin=-math.inf,
                points=used,
            )
        ratio = e / b
        if ratio > k_star:
            k_star, argmax = ratio, i
    margins = [k_star * b - e for e, b in zip(empirical, bound) if not math.isnan(b)]
    return FitResult(
        k_star=k_star,
        argmax_index=argmax,
        argmax_point=None if points is None or argmax is None else float(points[argmax]),
        margin=min(margins) if margins else 0.0,
        points=used,
    )


def fit_curve(curve: TailCurve) -> FitResult:
    return fit_constant(curve.empirical, curve.bound_raw, curve.t_grid)


def fit_loglog_slope(points: Sequence[float], values: Sequence[float]) -> SlopeFit:
    """Least-squares slope of log(values) against log(points).

    Raises:
        ValueError: With fewer than 4 points or a nonpositive value.
    """
    if len(points) != len(values):
        raise ValueError("points and values must have the same length")
    if len(points) < 4:
        raise ValueError(f"a scaling sweep needs at least 4 points, got {len(points)}")
    if min(points) <= 0 or min(values) <= 0:
        raise ValueError("log-log regression needs positive points and values")
    result = stats.linregress(np.log(points), np.log(values))
    return SlopeFit(
        points=[float(x) for x in points],
        values=[float(y) for y in values],
        slope=float(result.slope),
        std_err=float(result.stderr),
        intercept=float(result.intercept),
    )


def scaling_sweep(grid: Sequence[int], statistic: Callable[[int], float]) -> SlopeFit:
    """Evaluate ``statistic`` at every grid point and fit the log-log slope."""
    values = []
    for x in grid:
        values.append(float(statistic(x)))
        logger.debug("Sweep point %s -> %.6g", x, values[-1])
    return fit_loglog_slope(list(grid), values)


# -- Audits -------------------------------------------------------------------


class AuditRow(BaseModel):
    """One inequality check at one parameter point."""

    check: str
    t: float
    s: float = math.nan
    lhs: float
    rhs: float
    std_err: float
    passed: bool


def _hoffmann_jorgensen(table: TrialTable, t_grid: Sequence[float], s_grid: Sequence[float], slack: float) -> list[AuditRow]:
    rows = []
    for t in t_grid:
        p_t, se_t = exceedance(table.sum_norm, t)
        for s in s_grid:
            lhs, se_l = exceedance(table.sum_norm, 2.0 * t + s)
            p_s, se_s = exceedance(table.max_norm, s)
            rhs = bounds.hoffmann_jorgensen_rhs(p_t, p_s)
            se = se_l + 8.0 * p_t * se_t + se_s
            rows.append(
                AuditRow(check="hoffmann_jorgensen", t=t, s=s, lhs=lhs, rhs=rhs, std_err=se, passed=lhs <= rhs + slack * se)
            )
    return rows


def _levy(table: TrialTable, t_grid: Sequence[float], slack: float) -> list[AuditRow]:
    rows = []
    for t in t_grid:
        p_sum, se_sum = exceedance(table.sum_norm, t)
        p_max, se_max = exceedance(table.max_norm, t)
        lower = bounds.levy_lower(p_max)
        se = se_sum + 0.5 * se_max
        rows.append(AuditRow(check="levy", t=t, lhs=lower, rhs=p_sum, std_err=se, passed=lower <= p_sum + slack * se))
    return rows


def _symmetrization(table: TrialTable, p_list: Sequence[float], slack: float) -> list[AuditRow]:
    rows = []
    sym = table.require("sym_norm")
    for p in p_list:
        lhs, se_l = moment_of(table.sum_norm, p)
        sym_value, se_s = moment_of(sym, p)
        rhs = 2.0 * sym_value
        se = se_l + 2.0 * se_s
        rows.append(AuditRow(check="symmetrization", t=p, lhs=lhs, rhs=rhs, std_err=se, passed=lhs <= rhs + slack * se))
    return rows


def median_lower_confidence(samples: np.ndarray, slack: float) -> float:
    """Order statistic at rank N/2 - slack sqrt(N/4): a lower confidence value of the median."""
    n = samples.size
    rank = max(0, math.floor(n / 2.0 - slack * math.sqrt(n / 4.0)))
    return float(np.partition(samples, rank)[rank])


def _median(table: TrialTable, sigma: float, slack: float) -> list[AuditRow]:
    quad = np.abs(table.require("quad_forms"))
    med = np.median(quad, axis=0)
    worst = int(np.argmax(med))
    lower = median_lower_confidence(quad[:, worst], slack)
    rhs = bounds.MEDIAN_FACTOR * sigma
    return [
        AuditRow(
            check="median",
            t=float(worst),
            lhs=float(med[worst]),
            rhs=rhs,
            std_err=float(med[worst]) - lower,
            passed=lower <= rhs,
        )
    ]


def inequality_audit(
    ensemble: Ensemble,
    trials: int,
    seed: SeedSpec,
    *,
    checks: Sequence[str],
    t_grid: Sequence[float],
    s_grid: Sequence[float],
    p_list: Sequence[float] = (1.0, 2.0),
    sigma: float = 0.0,
    directions: np.ndarray | None = None,
    slack: float = 3.0,
    threads: int = 1,
    chunk: int = 256,
) -> list[AuditRow]:
    """Hoffmann-Jorgensen, Levy, symmetrization and directional median checks.

    Tail checks pass when ``lhs <= rhs + slack * se``. The median check passes
    when a lower confidence order statistic of ``<S v, v>`` along the worst
    direction stays below ``sigma sqrt(2)``.

    Raises:
        ConfigError: If a symmetric-only check is requested for a
            non-symmetric ensemble, or the median check lacks directions.
    """
    symmetric_only = {"hoffmann_jorgensen", "levy"} & set(checks)
    if symmetric_only and not ensemble.is_symmetric:
        raise ConfigError(f"{sorted(symmetric_only)} need a symmetric ensemble, got {ensemble.kind}")
    if "median" in checks and directions is None:
        raise ConfigError("the median check needs a direction set")
    table = simulate(
        ensemble,
        trials,
        seed,
        symmetrize="symmetrization" in checks,
        directions=directions if "median" in checks else None,
        threads=threads,
        chunk=chunk,
    )
    rows: list[AuditRow] = []
    if "hoffmann_jorgensen" in checks:
        rows.extend(_hoffmann_jorgensen(table, t_grid, s_grid, slack))
    if "levy" in checks:
        rows.extend(_levy(table, t_grid, slack))
    if "symmetrization" in checks:
        rows.extend(_symmetrization(table, p_list, slack))
    if "median" in checks:
        rows.extend(_median(table, sigma, slack))
    logger.info("Audit: %d/%d checks passed", sum(r.passed for r in rows), len(rows))
    return rows


class PropositionRow(BaseModel):
    """Truncation-proposition check at one level t."""

    t: float
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    passed: bool


def proposition_audit(
    lhs_table: TrialTable,
    rhs_table: TrialTable,
    t_grid: Sequence[float],
    bi: bounds.BoundInput,
    *,
    symmetric: bool,
    median_bound: float | None = None,
    slack: float = 3.0,
) -> list[PropositionRow]:
    """Compare P(||S|| > c t) with the proposition's right-hand side.

    ``c`` is 3 for symmetric ensembles and 12 otherwise. The component
    tails of the right-hand side come from ``rhs_table``, which may be the
    same table as ``lhs_table``. Levels below the proposition's threshold
    are skipped.
    """
    threshold = bounds.proposition_threshold(bi, symmetric=symmetric, median_bound=median_bound)
    c_exp, c_prod, c_max = bounds.PROPOSITION_SYMMETRIC_CONSTANTS if symmetric else bounds.PROPOSITION_CONSTANTS
    scale = 3.0 if symmetric else 12.0
    delta = rhs_table.require("delta_norm")
    weighted = rhs_table.sum_norm if symmetric else rhs_table.require("sym_norm")
    rows = []
    for t in t_grid:
        if t < threshold:
            continue
        lhs, lhs_se = exceedance(lhs_table.sum_norm, scale * t)
        p_delta, se_delta = exceedance(delta, t / 2.0)
        p_sum, se_sum = exceedance(weighted, t)
        p_max, se_max = exceedance(rhs_table.max_norm, t)
        rhs = bounds.prop_fuk_nagaev_rhs(
            bi, t, p_delta=p_delta, p_sum=p_sum, p_max=p_max, symmetric=symmetric, median_bound=median_bound
        )
        rhs_se = c_prod * (se_delta * p_sum + p_delta * se_sum) + c_max * se_max
        rows.append(
            PropositionRow(
                t=t,
                lhs=lhs,
                lhs_se=lhs_se,
                rhs=rhs,
                rhs_se=rhs_se,
                passed=lhs <= rhs + slack * (lhs_se + rhs_se),
            )
        )
    return rows
