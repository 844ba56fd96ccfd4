"""Tests for report emission and loading."""

import math
from pathlib import Path

import pytest

from matconc.harness.models import Report
from matconc.harness.report import emit_report, load_summary, read_table
from matconc.lib.errors import ReportError
from matconc.version import SCHEMA_VERSION


def make_report(k_fit: float = 1.5) -> Report:
    report = Report(name="demo run", kind="verify-bernstein", config={"trials": 100})
    table = report.table("bernstein tail", ["t", "empirical", "passed"])
    report.verdict("tail", True, table, table.add(1.5, 0.25, True))
    table.add(3.0, math.nan, False)
    report.fitted_K["bernstein"] = k_fit
    report.runtime["threads"] = 2
    return report


class TestEmit:
    """CSV and summary output."""

    def test_files(self, reports_dir: Path) -> None:
        written = emit_report(make_report(), reports_dir)
        assert [p.name for p in written] == ["bernstein-tail.csv", "summary.json"]
        header, rows = read_table(reports_dir / "bernstein-tail.csv")
        assert header == ["t", "empirical", "passed"]
        assert rows == [["1.5", "0.25", "1"], ["3.0", "nan", "0"]]

    def test_summary(self, reports_dir: Path) -> None:
        emit_report(make_report(), reports_dir)
        summary = load_summary(reports_dir)
        assert summary.schema_version == SCHEMA_VERSION
        assert summary.name == "demo run"
        assert summary.passed
        assert summary.tables == ["bernstein tail"]
        assert summary.runtime == {"threads": 2}
        assert load_summary(reports_dir / "summary.json").verdicts[0].row == 0

    def test_infinite_constant(self, reports_dir: Path) -> None:
        emit_report(make_report(math.inf), reports_dir)
        assert '"bernstein": "Infinity"' in (reports_dir / "summary.json").read_text()

    def test_tables_are_reproducible(self, tmp_path: Path) -> None:
        emit_report(make_report(), tmp_path / "a")
        emit_report(make_report(), tmp_path / "b")
        name = "bernstein-tail.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_tables(self, reports_dir: Path) -> None:
        with pytest.raises(ReportError):
            emit_report(Report(name="empty", kind="audit", config={}), reports_dir)

    def test_unwritable(self, tmp_path: Path) -> None:
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(ReportError):
            emit_report(make_report(), blocker / "sub")


class TestLoad:
    """Reading reports back."""

    def test_missing_summary(self, tmp_path: Path) -> None:
        with pytest.raises(ReportError):
            load_summary(tmp_path)

    def test_malformed_summary(self, tmp_path: Path) -> None:
        (tmp_path / "summary.json").write_text("{")
        with pytest.raises(ReportError):
            load_summary(tmp_path)

    def test_empty_table(self, tmp_path: Path) -> None:
        path = tmp_path / "t.csv"
        path.write_text("")
        with pytest.raises(ReportError):
            read_table(path)
