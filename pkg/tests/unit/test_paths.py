"""Tests for the report directory layout."""

from pathlib import Path

import pytest

from matconc.lib import paths


def test_slug() -> None:
    assert paths.slug("fuk nagaev/split") == "fuk-nagaev-split"
    assert paths.slug("cov_scaling.v2") == "cov_scaling.v2"
    assert paths.slug("///") == "report"


def test_report_dir(tmp_path: Path) -> None:
    assert paths.report_dir("eig scaling", tmp_path) == tmp_path / "eig-scaling"


def test_list_reports(tmp_path: Path) -> None:
    for name in ("b", "a"):
        (tmp_path / name).mkdir()
        (tmp_path / name / paths.SUMMARY_FILE).write_text("{}")
    (tmp_path / "partial").mkdir()
    assert paths.list_reports(tmp_path) == [tmp_path / "a", tmp_path / "b"]
    assert paths.list_reports(tmp_path / "missing") == []


def test_configure(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(paths, "PROJECT_ROOT", paths.PROJECT_ROOT)
    monkeypatch.setattr(paths, "REPORTS_DIR", paths.REPORTS_DIR)
    paths.configure(root=tmp_path)
    assert paths.project_root() == tmp_path
    assert paths.reports_path() == tmp_path / "reports"
    paths.configure(reports_dir=tmp_path / "elsewhere")
    assert paths.report_dir("x") == tmp_path / "elsewhere" / "x"
