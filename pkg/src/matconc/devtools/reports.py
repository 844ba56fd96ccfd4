"""Inspect emitted reports.

Examples::

    $ uv run matconc-devtools reports list
    $ uv run matconc-devtools reports list --dir /tmp/reports
    $ uv run matconc-devtools reports show subsample-identity
    $ uv run matconc-devtools reports table subsample-identity subsample_moments
"""

from pathlib import Path

import typer

from matconc.harness.config import settings
from matconc.harness.report import load_summary, read_table
from matconc.lib.errors import ReportError
from matconc.lib.paths import list_reports, report_dir, slug

app = typer.Typer(no_args_is_help=True)


def _base(directory: Path | None) -> Path:
    return directory or settings.reports_dir


@app.command("list")
def list_cmd(
    directory: Path | None = typer.Option(None, "--dir", "-d", help="Reports root (default: settings)"),
) -> None:
    """List reports with their kind and overall result."""
    from rich.console import Console
    from rich.table import Table

    dirs = list_reports(_base(directory))
    if not dirs:
        typer.echo(f"No reports found under {_base(directory)}")
        raise typer.Exit(1)
    table = Table(title="Reports")
    for column in ("name", "kind", "result", "verdicts", "tables"):
        table.add_column(column)
    for path in dirs:
        try:
            summary = load_summary(path)
        except ReportError as e:
            table.add_row(path.name, "?", f"[red]{e}[/red]", "", "")
            continue
        failed = sum(1 for v in summary.verdicts if v.asserted and not v.passed)
        result = "[green]pass[/green]" if summary.passed else f"[red]{failed} failed[/red]"
        table.add_row(summary.name, summary.kind, result, str(len(summary.verdicts)), str(len(summary.tables)))
    Console(highlight=False).print(table)


@app.command("show")
def show(
    name: str = typer.Argument(help="Report name"),
    directory: Path | None = typer.Option(None, "--dir", "-d", help="Reports root (default: settings)"),
) -> None:
    """Show the verdicts, constants and slopes of one report."""
    try:
        summary = load_summary(report_dir(name, _base(directory)))
    except ReportError as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(1) from e

    typer.echo(f"\n=== {summary.name} ({summary.kind}, schema {summary.schema_version}) ===\n")
    for v in summary.verdicts:
        mark = "pass" if v.passed else ("FAIL" if v.asserted else "fail (diagnostic)")
        row = "" if v.row is None else f" row {v.row}"
        typer.echo(f"  {mark:<18} {v.name}  [{v.table}{row}]")
    if summary.fitted_K:
        typer.echo("\nFitted constants:")
        for key, value in summary.fitted_K.items():
            typer.echo(f"  {key}: {value:.4g}")
    if summary.slopes:
        typer.echo("\nSlopes:")
        for key, fit in summary.slopes.items():
            typer.echo(f"  {key}: {fit.slope:.4f} +/- {fit.std_err:.4f}")
    threads = summary.runtime.get("threads")
    if threads is not None:
        typer.echo(f"\nThreads: {threads}")


@app.command("table")
def table(
    name: str = typer.Argument(help="Report name"),
    table_name: str = typer.Argument(help="Table name"),
    directory: Path | None = typer.Option(None, "--dir", "-d", help="Reports root (default: settings)"),
    limit: int = typer.Option(50, "--limit", "-n", help="Rows to show"),
) -> None:
    """Print one CSV table of a report."""
    from rich.console import Console
    from rich.table import Table

    path = report_dir(name, _base(directory)) / f"{slug(table_name)}.csv"
    try:
        header, rows = read_table(path)
    except (OSError, ReportError) as e:
        typer.echo(f"Cannot read {path}: {e}", err=True)
        raise typer.Exit(1) from e
    out = Table(title=f"{name}/{table_name}")
    for column in header:
        out.add_column(column, justify="right")
    for row in rows[:limit]:
        out.add_row(*row)
    Console(highlight=False).print(out)
    if len(rows) > limit:
        typer.echo(f"... {len(rows) - limit} more rows")
