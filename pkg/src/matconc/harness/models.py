"""Experiment configs and result records.

An experiment config is a JSON object whose ``kind`` selects the runner:

- ``verify-bernstein``: explicit-constant Bernstein tail on a sign-fixed ensemble
- ``verify-fuk-nagaev``: truncation-proposition audit and Fuk-Nagaev constant fit
- ``verify-rosenthal``: Rosenthal moment, psi_1 and quantile bounds
- ``verify-psd-rosenthal``: Rosenthal bounds for PSD rank-one sums
- ``cov-scaling``: covariance estimation error against n
- ``eig-scaling``: eigenvector error against n, relative rank against classic
- ``subsample``: column subsampling moments and bounds
- ``audit``: Hoffmann-Jorgensen, Levy, symmetrization and median checks
- ``fit-constants``: worst-case constants over an (n, d, p) sweep, re-validated
  on a held-out seed

Every config carries ``master_seed``; there is no entropy seeding.

Examples:
    Parse a config from JSON::

        >>> cfg = parse_config('''{"kind": "subsample", "name": "eye5",
        ...     "master_seed": 1, "trials": 1000,
        ...     "matrix": {"identity": 5}, "deltas": [0.3]}''')
        >>> cfg.kind, cfg.matrix.build().cols
        ('subsample', 5)
"""

import math
from pathlib import Path
from typing import Annotated, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

from matconc.lib.matcore import RectMatrix
from matconc.lib.samplers import (
    Ensemble,
    PsdRankOneEnsemble,
    SignFixedEnsemble,
    VectorModel,
)
from matconc.lib.seeding import Purpose, SeedSpec, rng_for

# -- Result records -----------------------------------------------------------


class TailCurve(BaseModel):
    """Empirical tail frequencies against a bound on a t-grid."""

    t_grid: list[float] = Field(description="Strictly ascending levels")
    empirical: list[float] = Field(description="Frequencies of exceeding scale * t")
    std_err: list[float] = Field(description="Binomial standard errors")
    bound_raw: list[float] = Field(description="Bound values, nan outside the domain")
    bound_clamped: list[float]
    trials: int

    @model_validator(mode="after")
    def check_shape(self) -> Self:
        if not self.t_grid:
            raise ValueError("t_grid must not be empty")
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError("t_grid must be strictly ascending")
        n = len(self.t_grid)
        for name in ("empirical", "std_err", "bound_raw", "bound_clamped"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one value per grid point")
        return self

    def rows(self) -> list[list[float]]:
        return [
            list(r)
            for r in zip(self.t_grid, self.empirical, self.std_err, self.bound_raw, self.bound_clamped)
        ]


class MomentEstimate(BaseModel):
    """(E ||S||^p)^{1/p} with its delta-method standard error and the M moments."""

    p: float
    value: float = Field(ge=0.0)
    std_err: float
    trials: int
    EM: float = Field(description="E max_k ||W_k||")
    EMp: float = Field(description="E max_k ||W_k||^p")
    median: float = Field(description="Median of ||S||")


class FitResult(BaseModel):
    """Smallest K with K * bound >= empirical on every grid point."""

    k_star: float = Field(ge=0.0)
    argmax_index: int | None = None
    argmax_point: float | None = None
    infinite: bool = Field(default=False, description="A zero bound met a positive empirical value")
    margin: float = Field(default=0.0, description="min over the grid of K* bound - empirical")
    points: int = 0


class SlopeFit(BaseModel):
    """Least-squares slope on log-log scale."""

    points: list[float]
    values: list[float]
    slope: float
    std_err: float
    intercept: float


class Table(BaseModel):
    """One CSV table of a report."""

    name: str
    header: list[str]
    rows: list[list[float | int | str]] = Field(default_factory=list)

    def add(self, *values: float | int | str) -> int:
        """Append a row; returns its index."""
        if len(values) != len(self.header):
            raise ValueError(f"table {self.name} expects {len(self.header)} columns, got {len(values)}")
        self.rows.append(list(values))
        return len(self.rows) - 1


class Verdict(BaseModel):
    """Outcome of one check, traceable to a table row."""

    name: str
    passed: bool
    asserted: bool = Field(default=True, description="False for diagnostics that never fail a run")
    table: str
    row: int | None = None


class Report(BaseModel):
    """Everything a run produces."""

    model_config = ConfigDict(ser_json_inf_nan="strings")

    name: str
    kind: str
    config: dict[str, object]
    tables: list[Table] = Field(default_factory=list)
    verdicts: list[Verdict] = Field(default_factory=list)
    fitted_K: dict[str, float] = Field(default_factory=dict)
    slopes: dict[str, SlopeFit] = Field(default_factory=dict)
    runtime: dict[str, object] = Field(default_factory=dict)

    def table(self, name: str, header: list[str]) -> Table:
        t = Table(name=name, header=header)
        self.tables.append(t)
        return t

    def verdict(self, name: str, passed: bool, table: Table, row: int | None = None, *, asserted: bool = True) -> None:
        self.verdicts.append(
            Verdict(name=name, passed=bool(passed), asserted=asserted, table=table.name, row=row)
        )

    @property
    def passed(self) -> bool:
        """True iff every asserted verdict passed."""
        return all(v.passed for v in self.verdicts if v.asserted)


# -- Matrix input for subsampling ---------------------------------------------


class MatrixSpec(BaseModel):
    """B given explicitly, as an identity, or drawn with decaying column norms."""

    entries: list[list[float]] | None = None
    identity: int | None = Field(default=None, ge=1)
    rows: int | None = Field(default=None, ge=1)
    cols: int | None = Field(default=None, ge=1)
    column_decay: float = Field(default=0.0, ge=0.0, description="Column k scaled by (k+1)^-decay")
    basis_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_source(self) -> Self:
        given = sum(
            (self.entries is not None, self.identity is not None, self.rows is not None or self.cols is not None)
        )
        if given != 1:
            raise ValueError("give exactly one of entries, identity, or rows and cols")
        if (self.rows is None) != (self.cols is None):
            raise ValueError("rows and cols go together")
        return self

    def build(self) -> RectMatrix:
        if self.entries is not None:
            return RectMatrix(entries=np.asarray(self.entries, dtype=np.float64))
        if self.identity is not None:
            return RectMatrix(entries=np.eye(self.identity))
        assert self.rows is not None and self.cols is not None
        rng = rng_for(SeedSpec(master_seed=self.basis_seed), Purpose.BASIS)
        g = rng.standard_normal((self.rows, self.cols)) / math.sqrt(self.rows)
        return RectMatrix(entries=g * (np.arange(1, self.cols + 1, dtype=np.float64) ** -self.column_decay))


# -- Experiment configs -------------------------------------------------------


class _ConfigBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1, description="Report name")
    master_seed: int = Field(ge=0, lt=2**64, description="Master seed; required")
    trials: int = Field(ge=100, description="Monte Carlo trials (replications for sweeps)")
    output: Path | None = Field(default=None, description="Report directory override")

    @property
    def seed(self) -> SeedSpec:
        return SeedSpec(master_seed=self.master_seed)


class _GridMixin(BaseModel):
    t_grid: list[float] | None = Field(default=None, description="Explicit levels; default spans the domain")
    grid_points: int = Field(default=20, ge=2)
    t_max_factor: float = Field(default=5.0, gt=1.0, description="Default grid ends at factor * threshold")

    @field_validator("t_grid")
    @classmethod
    def check_grid(cls, v: list[float] | None) -> list[float] | None:
        if v is not None:
            if not v:
                raise ValueError("t_grid must not be empty")
            if any(b <= a for a, b in zip(v, v[1:])):
                raise ValueError("t_grid must be strictly ascending")
        return v

    def grid(self, threshold: float) -> list[float]:
        if self.t_grid is not None:
            return list(self.t_grid)
        lo = max(threshold, 1e-12)
        return [float(t) for t in np.linspace(lo, self.t_max_factor * lo, self.grid_points)]


PList = Annotated[list[Annotated[float, Field(ge=1.0)]], Field(min_length=1)]


class BernsteinConfig(_ConfigBase, _GridMixin):
    kind: Literal["verify-bernstein"] = "verify-bernstein"
    ensemble: SignFixedEnsemble
    p_list: PList = Field(default_factory=lambda: [1.0, 2.0, 4.0])


class FukNagaevConfig(_ConfigBase, _GridMixin):
    kind: Literal["verify-fuk-nagaev"] = "verify-fuk-nagaev"
    ensemble: Ensemble
    p: float = Field(default=2.0, ge=1.0)
    U: float | None = Field(default=None, ge=0.0, description="Truncation level; default 24 E M")
    split_trials: bool = Field(default=False, description="Estimate the two sides on disjoint trials")
    median_bound: float | None = Field(default=None, ge=0.0)
    pilot_trials: int = Field(default=10_000, ge=100, description="Trials for the E M pilot")


class RosenthalConfig(_ConfigBase):
    kind: Literal["verify-rosenthal"] = "verify-rosenthal"
    ensemble: Ensemble
    p_list: PList
    U: float | None = Field(default=None, ge=0.0, description="Truncation level; default 24 E M")
    u_multipliers: list[float] = Field(
        default_factory=lambda: [6.0, 12.0, 24.0, 48.0],
        description="Levels (times E M) of the Q_p monotonicity diagnostic",
    )
    pilot_trials: int = Field(default=10_000, ge=100)


class PsdRosenthalConfig(_ConfigBase):
    kind: Literal["verify-psd-rosenthal"] = "verify-psd-rosenthal"
    ensemble: PsdRankOneEnsemble
    p_list: PList


class CovScalingConfig(_ConfigBase):
    kind: Literal["cov-scaling"] = "cov-scaling"
    model: VectorModel
    n_list: list[int] = Field(min_length=4)
    p: float = Field(default=4.0, gt=2.0, description="Order of kappa and of the max-norm moment")
    slope_range: tuple[float, float] = (-0.6, -0.4)
    directions: int = Field(default=256, ge=1, description="Uniform directions of the spread/peaky diagnostic")


class EigScalingConfig(_ConfigBase):
    kind: Literal["eig-scaling"] = "eig-scaling"
    model: VectorModel
    j: int = Field(ge=1, description="1-based eigenvalue index, descending order")
    n_list: list[int] = Field(min_length=4)
    p: float | None = Field(default=None, gt=2.0, description="Adds the r_j / n^{1-2/p} term when set")
    slope_target: float = -0.5
    slope_tolerance: float = Field(default=0.1, gt=0.0)


class SubsampleConfig(_ConfigBase):
    kind: Literal["subsample"] = "subsample"
    matrix: MatrixSpec
    deltas: list[Annotated[float, Field(gt=0.0, lt=1.0)]] = Field(min_length=1)
    identity_checks: int = Field(default=100, ge=1)
    identity_tolerance: float = Field(default=1e-10, gt=0.0)


AuditCheck = Literal["hoffmann_jorgensen", "levy", "symmetrization", "median"]


class AuditConfig(_ConfigBase):
    kind: Literal["audit"] = "audit"
    ensemble: Ensemble
    checks: list[AuditCheck] = Field(
        default_factory=lambda: ["hoffmann_jorgensen", "levy", "symmetrization", "median"]
    )
    t_grid: list[float] | None = Field(default=None, description="Default: sigma * [0.25, 4]")
    s_grid: list[float] | None = None
    grid_points: int = Field(default=10, ge=2)
    p_list: PList = Field(default_factory=lambda: [1.0, 2.0])
    median_directions: int = Field(default=64, ge=1)
    psi1_samples: int = Field(default=1_000_000, ge=1000)
    truncation_grid_points: int = Field(default=10_001, ge=3)


class FitConstantsConfig(_ConfigBase):
    kind: Literal["fit-constants"] = "fit-constants"
    ensemble: Ensemble
    n_list: list[int] = Field(min_length=1)
    dims: list[int] = Field(min_length=1)
    p_list: PList
    holdout_seed: int = Field(ge=0, lt=2**64)
    grid_points: int = Field(default=8, ge=2)
    t_max_factor: float = Field(default=3.0, gt=1.0)

    @model_validator(mode="after")
    def check_holdout(self) -> Self:
        if self.holdout_seed == self.master_seed:
            raise ValueError("holdout_seed must differ from master_seed")
        return self


ExperimentConfig = Annotated[
    BernsteinConfig
    | FukNagaevConfig
    | RosenthalConfig
    | PsdRosenthalConfig
    | CovScalingConfig
    | EigScalingConfig
    | SubsampleConfig
    | AuditConfig
    | FitConstantsConfig,
    Field(discriminator="kind"),
]

config_adapter: TypeAdapter[ExperimentConfig] = TypeAdapter(ExperimentConfig)


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON config; raises pydantic.ValidationError with field paths."""
    return config_adapter.validate_json(text)


def load_config(path: Path) -> ExperimentConfig:
    return parse_config(path.read_text())


def dump_config(config: ExperimentConfig) -> str:
    """Normalized JSON of a config; parsing it back gives an equal config."""
    return config_adapter.dump_json(config, indent=2).decode()
