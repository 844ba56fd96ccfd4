"""Experiment runners.

:func:`run_experiment` dispatches a validated config to the runner of its
``kind``. Each runner fills a :class:`Report` with CSV tables, fitted
constants, slopes and verdicts; every verdict names the table row that
decides it (the worst row for aggregate checks).

Trial sets within one run are disjoint stream ranges of the master seed:

- main trials use streams ``[0, trials)``
- the right-hand side of a split proposition audit uses ``[trials, 2 trials)``
- the E M pilot uses ``[2 trials, 2 trials + pilot_trials)``

Replicated sweeps (covariance and eigenvector scaling) use stream
``i_n * trials + r`` for replicate ``r`` at the ``i_n``-th sample size.
"""

import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from matconc.harness.config import settings
from matconc.harness.mc import (
    TrialTable,
    exceedance,
    fit_constant,
    fit_curve,
    fit_loglog_slope,
    estimate_Qp,
    estimate_psi1,
    inequality_audit,
    moment_from_table,
    moment_of,
    proposition_audit,
    quantile_Qp,
    simulate,
    tail_curve,
)
from matconc.harness.models import (
    AuditConfig,
    BernsteinConfig,
    CovScalingConfig,
    EigScalingConfig,
    ExperimentConfig,
    FitConstantsConfig,
    FitResult,
    FukNagaevConfig,
    PsdRosenthalConfig,
    Report,
    RosenthalConfig,
    SlopeFit,
    SubsampleConfig,
    Table,
    config_adapter,
)
from matconc.harness.report import emit_report
from matconc.lib import bounds
from matconc.lib.errors import ConfigError, EnumerationLimitError, ResolutionError
from matconc.lib.estimators import (
    DirectionSet,
    TruncationParams,
    aligned_eigvec,
    default_tau,
    psi_trunc,
    rho_trunc,
    sample_covariance,
    spread_peaky_eval,
    truncated_covariance,
    truncation_lambda,
)
from matconc.lib.matcore import RectMatrix, SymMatrix, effective_rank, eig, op_norm, relative_rank
from matconc.lib.metrics import log_timing_summary, reset_timings, timed, timing_summary
from matconc.lib.paths import report_dir
from matconc.lib.samplers import Ensemble, analytic_effective_rank, hypercontractivity, sample_vectors
from matconc.lib.seeding import Purpose, SeedSpec, map_chunks, rng_for
from matconc.lib.subsample import (
    SubsampleInput,
    exact_subsample_moments,
    lemma_max_bound,
    mc_subsample_moments,
    prior_bound_sampling,
    prior_bound_tropp,
    sample_mask,
    subsample_bound,
    subsampled_norms,
)

logger = logging.getLogger(__name__)

TAIL_HEADER = ["t", "empirical", "stderr", "bound_raw", "bound_clamped"]
SLOPE_HEADER = ["statistic", "slope", "stderr", "intercept", "low", "high"]
MIN_RELATIVE_ADVANTAGE = 5.0
PSI1_EXPONENTIAL_TARGET = 2.0
PSI1_TOLERANCE = 0.05


class RunOptions(BaseModel):
    """Execution knobs of one run; none of them changes a CSV value."""

    threads: int = 1
    chunk: int = 256
    slack: float = 3.0
    directions: int = 1024


# -- Shared helpers -----------------------------------------------------------


def _erank(matrix: np.ndarray) -> float:
    return effective_rank(SymMatrix(entries=matrix))


def _check_excess(
    report: Report,
    name: str,
    table: Table,
    excess: dict[int, float],
    *,
    asserted: bool = True,
) -> bool:
    """Verdict over rows where ``excess <= 0`` means the check holds there.

    The verdict points at the row with the largest excess.
    """
    if not excess:
        report.verdict(name, False, table, None, asserted=asserted)
        return False
    worst = max(excess, key=lambda i: excess[i])
    passed = excess[worst] <= 0.0
    report.verdict(name, passed, table, worst, asserted=asserted)
    return passed


def _fit_verdict(report: Report, name: str, fit: FitResult, table: Table, rows: Sequence[int]) -> None:
    report.fitted_K[name] = fit.k_star
    row = rows[fit.argmax_index] if fit.argmax_index is not None and fit.argmax_index < len(rows) else None
    report.verdict(f"{name}_K_finite", fit.points > 0 and math.isfinite(fit.k_star), table, row)


def _slope_verdict(
    report: Report,
    statistic: str,
    fit: SlopeFit,
    low: float,
    high: float,
    *,
    asserted: bool = True,
) -> None:
    report.slopes[statistic] = fit
    table = next((t for t in report.tables if t.name == "slopes"), None) or report.table("slopes", SLOPE_HEADER)
    row = table.add(statistic, fit.slope, fit.std_err, fit.intercept, low, high)
    report.verdict(f"{statistic}_slope", low <= fit.slope <= high, table, row, asserted=asserted)


def _pilot_em(ensemble: Ensemble, config: FukNagaevConfig | RosenthalConfig, options: RunOptions) -> float:
    """E M from trials disjoint from the main and right-hand-side sets."""
    pilot = simulate(
        ensemble,
        config.pilot_trials,
        config.seed,
        symmetrize=False,
        threads=options.threads,
        chunk=options.chunk,
        offset=2 * config.trials,
    )
    em = float(pilot.max_norm.mean())
    logger.info("Pilot E M = %.6g from %d trials", em, config.pilot_trials)
    return em


def _truncation_level(configured: float | None, em: float) -> float:
    return configured if configured is not None else 24.0 * em


def _moment_bound_input(sigma2: float, erank: float, p: float, table: TrialTable, **extra: float) -> bounds.BoundInput:
    m = table.max_norm
    return bounds.BoundInput(
        sigma2=sigma2,
        erank=erank,
        p=p,
        EM=float(m.mean()),
        EMp=float((m**p).mean()),
        **extra,
    )


# -- verify-bernstein ---------------------------------------------------------


def run_bernstein(config: BernsteinConfig, report: Report, options: RunOptions) -> None:
    """Empirical tail of a sign-fixed sum against the explicit Bernstein bound."""
    ensemble = config.ensemble
    proxy = ensemble.variance_proxy()
    bi = bounds.BoundInput(sigma2=proxy.sigma2, U=ensemble.population_max_norm(), erank=_erank(proxy.matrix))
    logger.info("Bernstein inputs: sigma^2=%.6g U=%.6g r=%.4f", bi.sigma2, bi.U, bi.erank)
    table = simulate(
        ensemble, config.trials, config.seed, symmetrize=False, threads=options.threads, chunk=options.chunk
    )

    curve = tail_curve(table.sum_norm, config.grid(bounds.bernstein_threshold(bi)), lambda t: bounds.bernstein_tail(bi, t))
    tail = report.table("bernstein_tail", TAIL_HEADER)
    excess = {}
    for t, emp, se, raw, clamped in curve.rows():
        row = tail.add(t, emp, se, raw, clamped)
        if not math.isnan(raw):
            excess[row] = emp - clamped - options.slack * se
    _check_excess(report, "bernstein_tail_dominates", tail, excess)

    moments = report.table("bernstein_moment", ["p", "empirical", "stderr", "bound_raw"])
    values, raws, rows = [], [], []
    for p in config.p_list:
        est = moment_from_table(table, p)
        raw = bounds.bernstein_moment(bi.model_copy(update={"p": p}))
        rows.append(moments.add(p, est.value, est.std_err, raw))
        values.append(est.value)
        raws.append(raw)
    _fit_verdict(report, "bernstein_moment", fit_constant(values, raws, config.p_list), moments, rows)


# -- verify-fuk-nagaev --------------------------------------------------------


def run_fuk_nagaev(config: FukNagaevConfig, report: Report, options: RunOptions) -> None:
    """Truncation-proposition audit and the Fuk-Nagaev constant fit."""
    ensemble = config.ensemble
    proxy = ensemble.variance_proxy(config.seed)
    sigma2, erank = proxy.sigma2, _erank(proxy.matrix)
    level = _truncation_level(config.U, _pilot_em(ensemble, config, options))

    def run(offset: int) -> TrialTable:
        return simulate(
            ensemble,
            config.trials,
            config.seed,
            level=level,
            threads=options.threads,
            chunk=options.chunk,
            offset=offset,
        )

    main = run(0)
    rhs = run(config.trials) if config.split_trials else main
    # sigma_U <= sigma
    bi = _moment_bound_input(sigma2, erank, config.p, main, sigmaU2=sigma2, U=level)
    symmetric = ensemble.is_symmetric
    threshold = bounds.proposition_threshold(bi, symmetric=symmetric, median_bound=config.median_bound)
    rows = proposition_audit(
        main,
        rhs,
        config.grid(threshold),
        bi,
        symmetric=symmetric,
        median_bound=config.median_bound,
        slack=options.slack,
    )
    if not rows:
        raise ConfigError(f"no grid level reaches the proposition threshold {threshold:.6g}")
    prop = report.table("proposition", ["t", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "passed"])
    excess = {}
    for r in rows:
        idx = prop.add(r.t, r.lhs, r.lhs_se, r.rhs, r.rhs_se, int(r.passed))
        excess[idx] = r.lhs - r.rhs - options.slack * (r.lhs_se + r.rhs_se)
    _check_excess(report, "proposition_dominates", prop, excess)

    def bound(t: float) -> float:
        return bounds.fuk_nagaev_tail(bi, t, exceedance(main.max_norm, t)[0])

    curve = tail_curve(main.sum_norm, config.grid(bounds.fuk_nagaev_threshold(bi)), bound, scale=12.0)
    tail = report.table("fuk_nagaev_tail", TAIL_HEADER)
    tail_rows = [tail.add(*row) for row in curve.rows()]
    _fit_verdict(report, "fuk_nagaev_tail", fit_curve(curve), tail, tail_rows)


# -- verify-rosenthal ---------------------------------------------------------


def run_rosenthal(config: RosenthalConfig, report: Report, options: RunOptions) -> None:
    """Moment, psi_1 and quantile forms of the Rosenthal bound over ``p_list``."""
    ensemble = config.ensemble
    proxy = ensemble.variance_proxy(config.seed)
    sigma2, erank = proxy.sigma2, _erank(proxy.matrix)
    em = _pilot_em(ensemble, config, options)
    level = _truncation_level(config.U, em)
    table = simulate(ensemble, config.trials, config.seed, level=level, threads=options.threads, chunk=options.chunk)
    psi1 = estimate_psi1(table.max_norm)
    delta = table.require("delta_norm")

    def quantile(p: float) -> float:
        try:
            return quantile_Qp(delta, p)
        except ResolutionError as e:
            logger.warning("Skipping the quantile form: %s", e)
            return math.nan

    q1 = quantile(1.0)
    out = report.table(
        "rosenthal_moments",
        ["p", "empirical", "stderr", "EM", "EMp", "psi1M", "Q1", "Qp", "bound_moment", "bound_psi1", "bound_quantile"],
    )
    rows, values = [], []
    columns: dict[str, list[float]] = {"rosenthal_moment": [], "rosenthal_psi1": [], "rosenthal_quantile": []}
    for p in config.p_list:
        est = moment_from_table(table, p)
        bi = _moment_bound_input(sigma2, erank, p, table, psi1M=psi1)
        qp = quantile(p)
        moment = bounds.rosenthal_moment(bi)
        psi1_form = bounds.rosenthal_psi1(bi)
        quantile_form = bounds.rosenthal_quantile(bi, q1, qp) if not math.isnan(q1 + qp) else math.nan
        rows.append(out.add(p, est.value, est.std_err, bi.EM, bi.EMp, psi1, q1, qp, moment, psi1_form, quantile_form))
        values.append(est.value)
        columns["rosenthal_moment"].append(moment)
        columns["rosenthal_psi1"].append(psi1_form)
        columns["rosenthal_quantile"].append(quantile_form)
    for name in ("rosenthal_moment", "rosenthal_psi1"):
        _fit_verdict(report, name, fit_constant(values, columns[name], config.p_list), out, rows)
    if not all(math.isnan(b) for b in columns["rosenthal_quantile"]):
        fit = fit_constant(values, columns["rosenthal_quantile"], config.p_list)
        report.fitted_K["rosenthal_quantile"] = fit.k_star

    # Q_p along increasing truncation levels
    p0 = min(config.p_list)
    qtable = report.table("quantile_vs_level", ["multiplier", "U", "Qp"])
    qrows, qvalues = [], []
    for mult in sorted(config.u_multipliers):
        try:
            value = estimate_Qp(
                ensemble, mult * em, p0, config.trials, config.seed, threads=options.threads, chunk=options.chunk
            )
        except ResolutionError as e:
            logger.warning("Skipping the Q_p level diagnostic: %s", e)
            break
        qrows.append(qtable.add(mult, mult * em, value))
        qvalues.append(value)
    if qrows:
        increases = {row: b - a for row, a, b in zip(qrows[1:], qvalues, qvalues[1:])}
        if increases:
            _check_excess(report, "quantile_nonincreasing_in_level", qtable, increases, asserted=False)


# -- verify-psd-rosenthal -----------------------------------------------------


def run_psd_rosenthal(config: PsdRosenthalConfig, report: Report, options: RunOptions) -> None:
    """Rosenthal bounds for sums of X_k X_k^T, with the Jensen lower bound ||A_n||."""
    ensemble = config.ensemble
    a_n = ensemble.mean_sum()
    anorm, erank = op_norm(SymMatrix(entries=a_n)), _erank(a_n)
    table = simulate(ensemble, config.trials, config.seed, symmetrize=False, threads=options.threads, chunk=options.chunk)
    psi1 = estimate_psi1(table.max_norm)
    out = report.table("psd_rosenthal", ["p", "empirical", "stderr", "anorm", "bound_moment", "bound_psi1"])
    rows, values, moment_forms, psi1_forms = [], [], [], []
    jensen = {}
    for p in config.p_list:
        est = moment_from_table(table, p)
        bi = _moment_bound_input(0.0, erank, p, table, psi1M=psi1, anorm=anorm)
        moment = bounds.rosenthal_psd(bi, "moment")
        psi1_form = bounds.rosenthal_psd(bi, "psi1")
        row = out.add(p, est.value, est.std_err, anorm, moment, psi1_form)
        rows.append(row)
        values.append(est.value)
        moment_forms.append(moment)
        psi1_forms.append(psi1_form)
        jensen[row] = anorm - est.value - options.slack * est.std_err
    _fit_verdict(report, "psd_rosenthal_moment", fit_constant(values, moment_forms, config.p_list), out, rows)
    _fit_verdict(report, "psd_rosenthal_psi1", fit_constant(values, psi1_forms, config.p_list), out, rows)
    _check_excess(report, "moment_above_mean_norm", out, jensen)


# -- cov-scaling --------------------------------------------------------------


def run_cov_scaling(config: CovScalingConfig, report: Report, options: RunOptions) -> None:
    """||Sigma-hat - Sigma|| against n for the sample and truncated estimators."""
    model = config.model
    cov = model.covariance
    sigma = cov.matrix
    sigma_norm = float(cov.spectrum[0])
    erank = analytic_effective_rank(cov)
    k = hypercontractivity(model, config.p, seed=config.seed, directions=options.directions)
    kappa = k.value
    report.table("kappa", ["p", "value", "estimated"]).add(k.p, k.value, k.estimated)
    logger.info("cov-scaling: ||Sigma||=%.4g r=%.4g kappa=%.4g", sigma_norm, erank, kappa)

    def replicate(n: int, seed: SeedSpec) -> tuple[np.ndarray, SymMatrix, float]:
        x = sample_vectors(model, n, seed)
        s_hat = sample_covariance(x)
        tau = default_tau(op_norm(s_hat), effective_rank(s_hat), n)
        return x, s_hat, tau

    errors = report.table(
        "covariance_error",
        ["n", "mean_error", "stderr", "mean_truncated_error", "truncated_stderr", "max_norm_moment", "rate"],
    )
    diagnostics = report.table(
        "spread_peaky", ["n", "lambda", "sup_error", "sup_spread", "sup_peaky", "max_count", "worst_excess"]
    )
    means, truncated_means, rates, rows = [], [], [], []
    decomposition = {}
    for i_n, n in enumerate(config.n_list):

        def run_chunk(indices: range, n: int = n, base: int = i_n * config.trials) -> np.ndarray:
            out = np.empty((len(indices), 3))
            for row, r in enumerate(indices):
                x, s_hat, tau = replicate(n, config.seed.stream(base + r))
                out[row, 0] = op_norm(SymMatrix(entries=s_hat.entries - sigma))
                out[row, 1] = op_norm(SymMatrix(entries=truncated_covariance(x, tau).entries - sigma))
                out[row, 2] = float(np.max(np.einsum("ij,ij->i", x, x))) ** (config.p / 2.0)
            return out

        values = np.vstack(map_chunks(run_chunk, trials=config.trials, chunk=options.chunk, threads=options.threads))
        mean = values.mean(axis=0)
        se = values.std(axis=0, ddof=1) / math.sqrt(config.trials)
        rate = bounds.covariance_rate(sigma_norm, erank, n, float(mean[2]), config.p)
        rows.append(errors.add(n, mean[0], se[0], mean[1], se[1], mean[2], rate))
        means.append(float(mean[0]))
        truncated_means.append(float(mean[1]))
        rates.append(rate)

        if math.isfinite(kappa):
            seed = config.seed.stream(i_n * config.trials)
            x, s_hat, tau = replicate(n, seed)
            dirs = DirectionSet.build(
                model.dim, m=config.directions, seed=seed, extra=[cov.eigenbasis, eig(s_hat).eigenvectors]
            )
            params = TruncationParams(lam=truncation_lambda(kappa, sigma_norm, erank, n), kappa=kappa, tau=tau)
            split = spread_peaky_eval(x, params, dirs, sigma)
            # |error_v| <= spread_v + peaky_v along every direction
            gap = float(np.max(split.error - split.spread - split.peaky))
            summary = split.summary()
            row = diagnostics.add(
                n,
                params.lam,
                summary["sup_error"],
                summary["sup_spread"],
                summary["sup_peaky"],
                split.max_count,
                gap,
            )
            decomposition[row] = gap - 1e-9 * max(1.0, summary["sup_error"])

    lo, hi = config.slope_range
    _slope_verdict(report, "covariance_error", fit_loglog_slope(config.n_list, means), lo, hi)
    _slope_verdict(report, "truncated_error", fit_loglog_slope(config.n_list, truncated_means), lo, hi, asserted=False)
    fit = fit_constant(means[:1], rates[:1], config.n_list[:1])
    report.fitted_K["covariance_rate"] = fit.k_star
    within = {row: m - fit.k_star * r for row, m, r in zip(rows, means, rates)}
    _check_excess(report, "covariance_rate_holds_with_fitted_K", errors, within, asserted=False)
    if decomposition:
        _check_excess(report, "error_within_spread_plus_peaky", diagnostics, decomposition)


# -- eig-scaling --------------------------------------------------------------


def run_eig_scaling(config: EigScalingConfig, report: Report, options: RunOptions) -> None:
    """Eigenvector error against n, relative rank against the classic rate."""
    model = config.model
    cov = model.covariance
    sigma = SymMatrix(entries=cov.matrix)
    spectrum = eig(sigma)
    gap, rel_rank = relative_rank(spectrum, config.j)
    lambda_j = float(spectrum.eigenvalues[config.j - 1])
    sigma_norm = float(spectrum.eigenvalues[0])
    erank = effective_rank(sigma)
    logger.info("eig-scaling: j=%d lambda_j=%.4g g_j=%.4g r_j=%.4g r=%.4g", config.j, lambda_j, gap, rel_rank, erank)

    table = report.table(
        "eigvec_error",
        ["n", "rms_distance", "stderr", "relative_rate", "classic_rate", "chain_failures", "advantage"],
    )
    rms_values, ses, rel_rates, classic_rates, rows = [], [], [], [], []
    failures = {}
    for i_n, n in enumerate(config.n_list):

        def run_chunk(indices: range, n: int = n, base: int = i_n * config.trials) -> np.ndarray:
            out = np.empty((len(indices), 2))
            for row, r in enumerate(indices):
                x = sample_vectors(model, n, config.seed.stream(base + r))
                pair = aligned_eigvec(sample_covariance(x), sigma, config.j)
                out[row] = pair.projector_distance, float(not pair.chain_holds)
            return out

        values = np.vstack(map_chunks(run_chunk, trials=config.trials, chunk=options.chunk, threads=options.threads))
        sq = values[:, 0] ** 2
        rms = math.sqrt(float(sq.mean()))
        se = float(sq.std(ddof=1)) / math.sqrt(config.trials) / (2.0 * rms) if rms > 0.0 else 0.0
        rel = bounds.davis_kahan_relative(lambda_j, gap, rel_rank, n, config.p)
        classic = bounds.davis_kahan_classic(sigma_norm, gap, erank, n)
        count = int(values[:, 1].sum())
        row = table.add(n, rms, se, rel, classic, count, classic / rel)
        rows.append(row)
        failures[row] = float(count)
        rms_values.append(rms)
        ses.append(se)
        rel_rates.append(rel)
        classic_rates.append(classic)

    # both constants are fitted on the smallest n
    k_rel = rms_values[0] / rel_rates[0]
    k_classic = rms_values[0] / classic_rates[0]
    report.fitted_K["davis_kahan_relative"] = k_rel
    report.fitted_K["davis_kahan_classic"] = k_classic
    below_classic = {
        row: rms - k_classic * classic - options.slack * se
        for row, rms, classic, se in zip(rows, rms_values, classic_rates, ses)
    }
    _check_excess(report, "error_below_classic_rate", table, below_classic)
    target, tol = config.slope_target, config.slope_tolerance
    _slope_verdict(report, "eigvec_error", fit_loglog_slope(config.n_list, rms_values), target - tol, target + tol)
    _check_excess(report, "perturbation_chain_holds", table, failures)
    advantage = {row: MIN_RELATIVE_ADVANTAGE - classic / rel for row, classic, rel in zip(rows, classic_rates, rel_rates)}
    _check_excess(report, "relative_rank_advantage", table, advantage)


# -- subsample ----------------------------------------------------------------


def run_subsample(config: SubsampleConfig, report: Report, options: RunOptions) -> None:
    """Subsampling moments, exact where feasible, against the new and prior bounds."""
    b = config.matrix.build()
    moments = report.table(
        "subsample_moments",
        [
            "delta",
            "exact_plain",
            "exact_centered",
            "mc_plain",
            "mc_plain_stderr",
            "mc_centered",
            "mc_centered_stderr",
            "bound_plain",
            "bound_centered",
            "prior_sampling",
            "prior_tropp",
        ],
    )
    maxima = report.table(
        "column_maximum",
        ["delta", "mc_max", "mc_max_stderr", "bound", "mc_max_centered", "mc_max_centered_stderr", "bound_centered"],
    )
    agreement, lemma = {}, {}
    plain_values, centered_values, plain_bounds, centered_bounds, rows = [], [], [], [], []
    for delta in config.deltas:
        inp = SubsampleInput(B=b, delta=delta, seed=config.seed)
        try:
            exact = exact_subsample_moments(inp)
        except EnumerationLimitError:
            exact = None
        mc = mc_subsample_moments(inp, config.trials, threads=options.threads, chunk=options.chunk)
        plain_b = subsample_bound(inp, variant="plain")
        centered_b = subsample_bound(inp, variant="centered")
        row = moments.add(
            delta,
            exact.plain if exact is not None else math.nan,
            exact.centered if exact is not None else math.nan,
            mc.plain,
            mc.plain_se,
            mc.centered,
            mc.centered_se,
            plain_b,
            centered_b,
            prior_bound_sampling(inp),
            prior_bound_tropp(inp),
        )
        rows.append(row)
        if exact is not None:
            agreement[row] = max(
                abs(mc.plain - exact.plain) - options.slack * mc.plain_se,
                abs(mc.centered - exact.centered) - options.slack * mc.centered_se,
            )
        plain_values.append(exact.plain if exact is not None else mc.plain)
        centered_values.append(exact.centered if exact is not None else mc.centered)
        plain_bounds.append(plain_b)
        centered_bounds.append(centered_b)

        max_bound = lemma_max_bound(b, delta)
        max_bound_centered = lemma_max_bound(b, delta, centered=True)
        mrow = maxima.add(
            delta,
            mc.max_column,
            mc.max_column_se,
            max_bound,
            mc.max_column_centered,
            mc.max_column_centered_se,
            max_bound_centered,
        )
        lemma[mrow] = max(
            mc.max_column - max_bound - options.slack * mc.max_column_se,
            mc.max_column_centered - max_bound_centered - options.slack * mc.max_column_centered_se,
        )

    if agreement:
        _check_excess(report, "monte_carlo_matches_enumeration", moments, agreement)
    _check_excess(report, "column_maximum_bound", maxima, lemma)
    _fit_verdict(report, "subsample_plain", fit_constant(plain_values, plain_bounds, config.deltas), moments, rows)
    _fit_verdict(
        report, "subsample_centered", fit_constant(centered_values, centered_bounds, config.deltas), moments, rows
    )
    _identity_checks(config, b.rows, b.cols, report)


def _relative_error(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0.0 else 0.0


def _identity_checks(config: SubsampleConfig, rows: int, cols: int, report: Report) -> None:
    """||BR||^2 against ||sum delta_k B_k B_k^T|| on random instances of B's shape."""
    table = report.table("identity_checks", ["instance", "delta", "plain_relative_error", "centered_relative_error"])
    errors = {}
    for i in range(config.identity_checks):
        seed = config.seed.stream(i)
        rng = rng_for(seed, Purpose.AUX)
        b = RectMatrix(entries=rng.standard_normal((rows, cols)))
        delta = float(rng.uniform(0.05, 0.95))
        inp = SubsampleInput(B=b, delta=delta, seed=seed)
        norms = subsampled_norms(inp, sample_mask(cols, delta, seed))
        plain = _relative_error(norms.plain, norms.plain_identity)
        centered = _relative_error(norms.centered, norms.centered_identity)
        errors[table.add(i, delta, plain, centered)] = max(plain, centered) - config.identity_tolerance
    _check_excess(report, "norm_identity", table, errors)


# -- audit --------------------------------------------------------------------


def run_audit(config: AuditConfig, report: Report, options: RunOptions) -> None:
    """Classical inequalities on the configured ensemble plus truncation-function checks."""
    ensemble = config.ensemble
    proxy = ensemble.variance_proxy(config.seed)
    sigma = math.sqrt(proxy.sigma2)
    scale = sigma if sigma > 0.0 else 1.0
    default_grid = [float(t) for t in scale * np.linspace(0.25, 4.0, config.grid_points)]
    directions = None
    if "median" in config.checks:
        basis = eig(SymMatrix(entries=proxy.matrix)).eigenvectors
        directions = DirectionSet.build(
            ensemble.dimension, m=config.median_directions, seed=config.seed, extra=[basis]
        ).vectors
    rows = inequality_audit(
        ensemble,
        config.trials,
        config.seed,
        checks=config.checks,
        t_grid=config.t_grid or default_grid,
        s_grid=config.s_grid or default_grid,
        p_list=config.p_list,
        sigma=sigma,
        directions=directions,
        slack=options.slack,
        threads=options.threads,
        chunk=options.chunk,
    )
    table = report.table("audit", ["check", "t", "s", "lhs", "rhs", "stderr", "passed"])
    by_check: dict[str, dict[int, float]] = {}
    for r in rows:
        idx = table.add(r.check, r.t, r.s, r.lhs, r.rhs, r.std_err, int(r.passed))
        by_check.setdefault(r.check, {})[idx] = 0.0 if r.passed else 1.0
    for check in config.checks:
        _check_excess(report, check, table, by_check.get(check, {}))

    _truncation_function_checks(config, report)
    _psi1_calibration(config, report)


def _truncation_function_checks(config: AuditConfig, report: Report) -> None:
    x = np.linspace(-3.0, 3.0, config.truncation_grid_points)
    psi = psi_trunc(x)
    rho = rho_trunc(x)
    step = np.diff(x)
    lipschitz_psi = float(np.max(np.abs(np.diff(psi)) / step))
    lipschitz_rho = float(np.max(np.abs(np.diff(rho)) / step))
    # 1{x >= 1} <= rho(x) <= 1{x >= 1/2}
    sandwich = float(np.max(np.maximum((x >= 1.0) - rho, rho - (x >= 0.5))))
    table = report.table("truncation_functions", ["property", "value", "limit"])
    checks = (
        ("psi_lipschitz", lipschitz_psi, 1.0),
        ("psi_range", float(np.max(np.abs(psi))), 1.0),
        ("rho_lipschitz", lipschitz_rho, 2.0),
        ("rho_sandwich", sandwich, 0.0),
    )
    for name, value, limit in checks:
        row = table.add(name, value, limit)
        report.verdict(name, value <= limit + 1e-12, table, row)


def _psi1_calibration(config: AuditConfig, report: Report) -> None:
    samples = rng_for(config.seed, Purpose.AUX).exponential(size=config.psi1_samples)
    estimate = estimate_psi1(samples)
    table = report.table("psi1_exponential", ["samples", "estimate", "target", "tolerance"])
    row = table.add(config.psi1_samples, estimate, PSI1_EXPONENTIAL_TARGET, PSI1_TOLERANCE)
    report.verdict("psi1_exponential", abs(estimate - PSI1_EXPONENTIAL_TARGET) <= PSI1_TOLERANCE, table, row)


# -- fit-constants ------------------------------------------------------------


class _SweepRecord(BaseModel):
    bound: str
    n: int
    dim: int
    p: float
    point: float
    empirical: float
    std_err: float
    bound_raw: float
    holdout: float = math.nan
    holdout_se: float = math.nan


def _sweep_records(
    table: TrialTable,
    bi: bounds.BoundInput,
    *,
    n: int,
    dim: int,
    grid_points: int,
    t_max_factor: float,
) -> list[_SweepRecord]:
    """Fuk-Nagaev tail points and the Rosenthal moment at one (n, d, p)."""
    base = {"n": n, "dim": dim, "p": bi.p}
    records = []
    threshold = bounds.fuk_nagaev_threshold(bi)
    lo = max(threshold, 1e-12)
    for t in np.linspace(lo, t_max_factor * lo, grid_points):
        emp, se = exceedance(table.sum_norm, 12.0 * t)
        raw = bounds.fuk_nagaev_tail(bi, float(t), exceedance(table.max_norm, float(t))[0])
        records.append(_SweepRecord(bound="fuk_nagaev_tail", point=float(t), empirical=emp, std_err=se, bound_raw=raw, **base))
    value, se = moment_of(table.sum_norm, bi.p)
    records.append(
        _SweepRecord(
            bound="rosenthal_moment",
            point=bi.p,
            empirical=value,
            std_err=se,
            bound_raw=bounds.rosenthal_moment(bi),
            **base,
        )
    )
    return records


def _holdout(record: _SweepRecord, table: TrialTable) -> tuple[float, float]:
    if record.bound == "fuk_nagaev_tail":
        return exceedance(table.sum_norm, 12.0 * record.point)
    return moment_of(table.sum_norm, record.p)


def run_fit_constants(config: FitConstantsConfig, report: Report, options: RunOptions) -> None:
    """Worst-case constants over the (n, d, p) sweep, re-validated on a held-out seed."""
    records: list[_SweepRecord] = []
    holdout_seed = SeedSpec(master_seed=config.holdout_seed)
    for n in config.n_list:
        for dim in config.dims:
            ensemble = config.ensemble.resized(n=n, dim=dim)
            proxy = ensemble.variance_proxy(config.seed)
            sigma2, erank = proxy.sigma2, _erank(proxy.matrix)
            fit_table = simulate(
                ensemble, config.trials, config.seed, symmetrize=False, threads=options.threads, chunk=options.chunk
            )
            check_table = simulate(
                ensemble, config.trials, holdout_seed, symmetrize=False, threads=options.threads, chunk=options.chunk
            )
            for p in config.p_list:
                bi = _moment_bound_input(sigma2, erank, p, fit_table)
                for record in _sweep_records(
                    fit_table, bi, n=n, dim=dim, grid_points=config.grid_points, t_max_factor=config.t_max_factor
                ):
                    record.holdout, record.holdout_se = _holdout(record, check_table)
                    records.append(record)
            logger.info("Swept n=%d d=%d", n, dim)

    table = report.table(
        "fit_sweep",
        [
            "bound",
            "n",
            "d",
            "p",
            "point",
            "empirical",
            "stderr",
            "bound_raw",
            "holdout_empirical",
            "holdout_stderr",
        ],
    )
    rows = [
        table.add(r.bound, r.n, r.dim, r.p, r.point, r.empirical, r.std_err, r.bound_raw, r.holdout, r.holdout_se)
        for r in records
    ]
    for name in ("fuk_nagaev_tail", "rosenthal_moment"):
        picked = [(row, r) for row, r in zip(rows, records) if r.bound == name]
        fit = fit_constant([r.empirical for _, r in picked], [r.bound_raw for _, r in picked])
        _fit_verdict(report, name, fit, table, [row for row, _ in picked])
        excess = {
            row: r.holdout - fit.k_star * r.bound_raw - options.slack * (r.holdout_se + r.std_err)
            for row, r in picked
        }
        _check_excess(report, f"{name}_holds_on_holdout", table, excess)


# -- Dispatch -----------------------------------------------------------------


RUNNERS: dict[str, Callable[..., None]] = {
    "verify-bernstein": run_bernstein,
    "verify-fuk-nagaev": run_fuk_nagaev,
    "verify-rosenthal": run_rosenthal,
    "verify-psd-rosenthal": run_psd_rosenthal,
    "cov-scaling": run_cov_scaling,
    "eig-scaling": run_eig_scaling,
    "subsample": run_subsample,
    "audit": run_audit,
    "fit-constants": run_fit_constants,
}


def run_experiment(
    config: ExperimentConfig,
    *,
    out_dir: Path | None = None,
    threads: int | None = None,
    trials_override: int | None = None,
    write: bool = True,
) -> Report:
    """Run one experiment and, unless ``write`` is False, emit its report.

    Args:
        config: A validated experiment config.
        out_dir: Report directory; defaults to ``config.output`` and then
            ``<reports_dir>/<name>``.
        threads: Worker threads; defaults to the settings value. Never
            changes the tables.
        trials_override: Replaces ``config.trials``; the echoed config
            shows the value actually used.
        write: Emit CSV tables and ``summary.json``.
    """
    if trials_override is not None:
        config = config_adapter.validate_python(config.model_dump() | {"trials": trials_override})
    options = RunOptions(
        threads=threads or settings.threads,
        chunk=settings.chunk_trials,
        slack=settings.se_slack,
        directions=settings.directions,
    )
    reset_timings()
    logger.info("Running %s (%s, %d trials, %d threads)", config.name, config.kind, config.trials, options.threads)
    report = Report(name=config.name, kind=config.kind, config=config.model_dump(mode="json"))
    with timed(config.kind):
        RUNNERS[config.kind](config, report, options)
    report.runtime = {"threads": options.threads, "timings": timing_summary()}
    log_timing_summary()
    failed = [v.name for v in report.verdicts if v.asserted and not v.passed]
    if failed:
        logger.warning("Failed verdicts: %s", ", ".join(failed))
    if write:
        emit_report(report, out_dir or config.output or report_dir(config.name, settings.reports_dir))
    return report
