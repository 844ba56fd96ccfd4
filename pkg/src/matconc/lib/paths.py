"""Report directory layout.

Pure path layout; no disk iteration beyond :func:`list_reports`.

Paths auto-detect the project root (walking up to ``pyproject.toml``,
falling back to the working directory for installed copies) but can be
overridden via :func:`configure`::

    from matconc.lib.paths import configure
    configure(reports_dir=Path("/data/reports"))

Layout:
    reports/<experiment name>/summary.json
    reports/<experiment name>/<table>.csv

Examples:
    Override paths for testing::

        >>> configure(root=Path("/tmp/test-project"))
        >>> reports_path()
        PosixPath('/tmp/test-project/reports')
        >>> report_dir("bernstein")
        PosixPath('/tmp/test-project/reports/bernstein')
"""

import re
from pathlib import Path

SUMMARY_FILE = "summary.json"
_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def find_project_root() -> Path:
    """Find project root by walking up to pyproject.toml."""
    current = Path(__file__).resolve().parent
    for parent in [current, *current.parents]:
        if (parent / "pyproject.toml").exists():
            return parent
    return Path.cwd()


# -- Mutable path state -------------------------------------------------------
# Auto-detected on first import; overridable via configure().

PROJECT_ROOT = find_project_root()
REPORTS_DIR = PROJECT_ROOT / "reports"


def configure(*, root: Path | None = None, reports_dir: Path | None = None) -> None:
    """Override auto-detected paths.

    Args:
        root: Project root directory. Resets ``reports_dir`` to
            ``root/reports`` unless it is also specified.
        reports_dir: Override the reports directory independently.
    """
    global PROJECT_ROOT, REPORTS_DIR  # noqa: PLW0603

    if root is not None:
        PROJECT_ROOT = root
        REPORTS_DIR = root / "reports"
    if reports_dir is not None:
        REPORTS_DIR = reports_dir


# -- Public path accessors ----------------------------------------------------


def project_root() -> Path:
    return PROJECT_ROOT


def reports_path() -> Path:
    """Return the reports root (``<root>/reports`` by default)."""
    return REPORTS_DIR


def slug(name: str) -> str:
    """Filesystem-safe form of an experiment or table name."""
    cleaned = _UNSAFE.sub("-", name).strip("-")
    return cleaned or "report"


def report_dir(name: str, base: Path | None = None) -> Path:
    """Directory of one experiment's report: ``<reports>/<slug(name)>/``."""
    return (base or REPORTS_DIR) / slug(name)


def list_reports(base: Path | None = None) -> list[Path]:
    """Report directories holding a summary, sorted by name."""
    root = base or REPORTS_DIR
    if not root.is_dir():
        return []
    return sorted(p.parent for p in root.glob(f"*/{SUMMARY_FILE}"))
