"""Report emission.

A report directory holds one CSV per table and ``summary.json``::

    reports/<name>/
        bernstein_tail.csv
        bernstein_moment.csv
        summary.json

CSV bodies depend only on the config and master seed; wall-clock timings
and the thread count live in the ``runtime`` section of the summary.
Non-finite numbers are written as ``nan``/``inf`` in CSVs and as the
strings ``"NaN"``/``"Infinity"`` in JSON.
"""

import csv
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from matconc.harness.models import Report, SlopeFit, Verdict
from matconc.lib.errors import ReportError
from matconc.lib.paths import SUMMARY_FILE, slug
from matconc.version import SCHEMA_VERSION

logger = logging.getLogger(__name__)


class ReportSummary(BaseModel):
    """Contents of ``summary.json``."""

    model_config = ConfigDict(ser_json_inf_nan="strings")

    schema_version: str = SCHEMA_VERSION
    name: str
    kind: str
    passed: bool
    config: dict[str, object]
    tables: list[str]
    fitted_K: dict[str, float] = Field(default_factory=dict)
    slopes: dict[str, SlopeFit] = Field(default_factory=dict)
    verdicts: list[Verdict] = Field(default_factory=list)
    runtime: dict[str, object] = Field(default_factory=dict)

    @classmethod
    def of(cls, report: Report) -> "ReportSummary":
        return cls(
            name=report.name,
            kind=report.kind,
            passed=report.passed,
            config=report.config,
            tables=[t.name for t in report.tables],
            fitted_K=report.fitted_K,
            slopes=report.slopes,
            verdicts=report.verdicts,
            runtime=report.runtime,
        )


def _cell(value: float | int | str) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: Report, out_dir: Path) -> list[Path]:
    """Write every table as CSV plus ``summary.json``; returns the written paths.

    Raises:
        ReportError: If the report has no tables or a file cannot be written.
    """
    if not report.tables:
        raise ReportError(f"report {report.name!r} has no tables")
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in report.tables:
            path = out_dir / f"{slug(table.name)}.csv"
            with path.open("w", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(table.header)
                writer.writerows([_cell(v) for v in row] for row in table.rows)
            written.append(path)
        summary = out_dir / SUMMARY_FILE
        summary.write_text(ReportSummary.of(report).model_dump_json(indent=2) + "\n")
        written.append(summary)
    except OSError as e:
        raise ReportError(f"cannot write report to {out_dir}: {e}") from e
    logger.info("Wrote %d files to %s", len(written), out_dir)
    return written


def load_summary(path: Path) -> ReportSummary:
    """Read ``summary.json`` from a report directory (or the file itself).

    Raises:
        ReportError: If the file is missing or malformed.
    """
    file = path / SUMMARY_FILE if path.is_dir() else path
    try:
        return ReportSummary.model_validate_json(file.read_text())
    except (OSError, ValueError) as e:
        raise ReportError(f"cannot read report summary {file}: {e}") from e


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of one CSV table, as strings."""
    with path.open(newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ReportError(f"empty table {path}")
    return rows[0], rows[1:]
