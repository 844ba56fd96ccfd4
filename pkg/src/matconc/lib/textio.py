"""Plain-text matrix and sample formats.

Square matrices: first line ``d``, then ``d`` rows of ``d`` whitespace
separated decimals. Rectangular matrices: first line ``rows cols``, then
``rows`` rows. Samples: one vector per row, separated by whitespace or
commas, ``#`` comments allowed.

Examples:
    Round a symmetric matrix through the square format::

        >>> text = format_sym_matrix(SymMatrix(entries=np.eye(2)))
        >>> print(text, end="")
        2
        1 0
        0 1
        >>> parse_sym_matrix(text).dim
        2
"""

import io
from pathlib import Path

import numpy as np

from matconc.lib.errors import MatrixError
from matconc.lib.matcore import RectMatrix, SymMatrix


def _rows(text: str) -> list[list[str]]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.replace(",", " ").split())
    return lines


def _floats(rows: list[list[str]], expected_cols: int) -> np.ndarray:
    try:
        arr = np.array([[float(x) for x in row] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise MatrixError(f"non-numeric matrix entry: {e}") from e
    if arr.ndim != 2 or arr.shape[1] != expected_cols:
        raise MatrixError(f"every row must have {expected_cols} entries")
    return arr


def _format_number(x: float) -> str:
    return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))


def parse_sym_matrix(text: str) -> SymMatrix:
    """Parse the square format; symmetry is validated."""
    rows = _rows(text)
    if not rows or len(rows[0]) != 1:
        raise MatrixError("first line must hold the dimension d")
    d = int(rows[0][0])
    if len(rows) - 1 != d:
        raise MatrixError(f"expected {d} rows, found {len(rows) - 1}")
    return SymMatrix(entries=_floats(rows[1:], d))


def parse_rect_matrix(text: str) -> RectMatrix:
    """Parse the rectangular format with a ``rows cols`` header."""
    rows = _rows(text)
    if not rows or len(rows[0]) != 2:
        raise MatrixError("first line must hold 'rows cols'")
    n_rows, n_cols = int(rows[0][0]), int(rows[0][1])
    if len(rows) - 1 != n_rows:
        raise MatrixError(f"expected {n_rows} rows, found {len(rows) - 1}")
    return RectMatrix(entries=_floats(rows[1:], n_cols))


def format_sym_matrix(a: SymMatrix) -> str:
    lines = [str(a.dim)]
    lines.extend(" ".join(_format_number(x) for x in row) for row in a.entries)
    return "\n".join(lines) + "\n"


def format_rect_matrix(b: RectMatrix) -> str:
    lines = [f"{b.rows} {b.cols}"]
    lines.extend(" ".join(_format_number(x) for x in row) for row in b.entries)
    return "\n".join(lines) + "\n"


def parse_samples(text: str) -> np.ndarray:
    """Parse delimited samples into an (n, d) array."""
    cleaned = "\n".join(" ".join(row) for row in _rows(text))
    if not cleaned:
        raise MatrixError("no samples found")
    try:
        data = np.loadtxt(io.StringIO(cleaned), dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise MatrixError(f"malformed sample file: {e}") from e
    return data


def read_sym_matrix(path: Path) -> SymMatrix:
    return parse_sym_matrix(path.read_text())


def read_rect_matrix(path: Path) -> RectMatrix:
    return parse_rect_matrix(path.read_text())


def read_samples(path: Path) -> np.ndarray:
    return parse_samples(path.read_text())


def write_sym_matrix(path: Path, a: SymMatrix) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_sym_matrix(a))
