"""Experiment CLI.

Runs a JSON experiment config, validates configs, and describes matrices.

Exit codes:
    0: every asserted verdict passed
    1: at least one asserted verdict failed, or the run hit a numerical error
    2: the config (or an input file) is invalid

Usage:
    uv run matconc run configs/bernstein.json
    uv run matconc run configs/fit-constants.json --threads 8 --out /tmp/fit
    uv run matconc validate configs/subsample.json
    uv run matconc describe sigma.txt
"""

import logging
from pathlib import Path
from typing import Annotated

import numpy as np
import typer
from pydantic import ValidationError

from matconc.harness.config import settings
from matconc.harness.experiments import run_experiment
from matconc.harness.models import ExperimentConfig, Report, dump_config, load_config
from matconc.lib.errors import ConfigError, MatconcError, ReportError
from matconc.lib.matcore import effective_rank, eig, spectral_norm, stable_rank
from matconc.lib.textio import read_rect_matrix, read_sym_matrix

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_INVALID = 2

app = typer.Typer(
    name="matconc",
    help="Monte Carlo verification of matrix concentration bounds",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback(invoke_without_command=True)
def callback(ctx: typer.Context) -> None:
    """Monte Carlo verification of matrix concentration bounds."""
    if ctx.invoked_subcommand is None:
        raise typer.Exit()


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else settings.log_level)


def read_config(path: Path) -> ExperimentConfig:
    """Load a config or exit with code 2, listing the offending fields."""
    try:
        return load_config(path)
    except OSError as e:
        typer.echo(f"Cannot read {path}: {e}", err=True)
        raise typer.Exit(EXIT_INVALID) from e
    except ValidationError as e:
        typer.echo(f"Invalid config {path}:", err=True)
        for error in e.errors():
            where = ".".join(str(part) for part in error["loc"]) or "<root>"
            typer.echo(f"  {where}: {error['msg']}", err=True)
        raise typer.Exit(EXIT_INVALID) from e


def print_report(report: Report) -> None:
    """Verdict table, fitted constants and slopes."""
    from rich.console import Console
    from rich.table import Table

    console = Console(highlight=False)
    verdicts = Table(title=f"{report.name} ({report.kind})")
    verdicts.add_column("verdict")
    verdicts.add_column("result")
    verdicts.add_column("table")
    verdicts.add_column("row", justify="right")
    for v in report.verdicts:
        if v.passed:
            result = "[green]pass[/green]"
        else:
            result = "[red]FAIL[/red]" if v.asserted else "[yellow]fail (diagnostic)[/yellow]"
        verdicts.add_row(v.name, result, v.table, "" if v.row is None else str(v.row))
    console.print(verdicts)
    for name, k in report.fitted_K.items():
        console.print(f"  K*[{name}] = {k:.4g}")
    for name, fit in report.slopes.items():
        console.print(f"  slope[{name}] = {fit.slope:.4f} +/- {fit.std_err:.4f}")
    status = "[green]PASSED[/green]" if report.passed else "[red]FAILED[/red]"
    console.print(f"\n{status}")


@app.command()
def run(
    config_path: Annotated[Path, typer.Argument(help="Experiment config (JSON)")],
    out: Annotated[
        Path | None,
        typer.Option("--out", "-o", help="Report directory (default: reports/<name>)"),
    ] = None,
    threads: Annotated[
        int | None,
        typer.Option("--threads", "-t", min=1, help="Worker threads; never changes results"),
    ] = None,
    trials_override: Annotated[
        int | None,
        typer.Option("--trials-override", min=100, help="Replace the config's trial count"),
    ] = None,
    verbose: Annotated[
        bool,
        typer.Option("--verbose", "-v", help="Enable verbose logging"),
    ] = False,
) -> None:
    """Run one experiment and write its report."""
    setup_logging(verbose)
    config = read_config(config_path)
    try:
        report = run_experiment(config, out_dir=out, threads=threads, trials_override=trials_override)
    except ValidationError as e:
        typer.echo(f"Invalid override: {e}", err=True)
        raise typer.Exit(EXIT_INVALID) from e
    except ConfigError as e:
        typer.echo(f"Config error: {e}", err=True)
        raise typer.Exit(EXIT_INVALID) from e
    except ReportError as e:
        typer.echo(f"Report error: {e}", err=True)
        raise typer.Exit(EXIT_FAILED) from e
    except (MatconcError, ValueError) as e:
        logger.exception("Run failed")
        typer.echo(f"Run failed: {e}", err=True)
        raise typer.Exit(EXIT_FAILED) from e
    print_report(report)
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


@app.command()
def validate(
    config_path: Annotated[Path, typer.Argument(help="Experiment config (JSON)")],
) -> None:
    """Validate a config and print its normalized form."""
    config = read_config(config_path)
    typer.echo(dump_config(config))


@app.command()
def describe(
    matrix_path: Annotated[Path, typer.Argument(help="Matrix as whitespace-separated rows")],
    rect: Annotated[
        bool,
        typer.Option("--rect", help="Read a rectangular matrix (stable rank, column norms)"),
    ] = False,
    head: Annotated[int, typer.Option("--head", min=1, help="Eigenvalues to show")] = 10,
) -> None:
    """Print the effective or stable rank and the leading spectrum of a matrix."""
    try:
        if rect:
            b = read_rect_matrix(matrix_path)
            typer.echo(f"shape: {b.rows} x {b.cols}")
            typer.echo(f"spectral norm: {spectral_norm(b):.6g}")
            typer.echo(f"stable rank: {stable_rank(b):.6g}")
            columns = np.sort(np.sum(b.entries**2, axis=0))[::-1][:head]
            typer.echo("largest squared column norms: " + " ".join(f"{x:.6g}" for x in columns))
            return
        a = read_sym_matrix(matrix_path)
        spectrum = eig(a).eigenvalues
        typer.echo(f"dimension: {a.dim}")
        typer.echo(f"effective rank: {effective_rank(a):.6g}")
        typer.echo("leading eigenvalues: " + " ".join(f"{x:.6g}" for x in spectrum[:head]))
    except (OSError, ValueError) as e:
        typer.echo(f"Cannot describe {matrix_path}: {e}", err=True)
        raise typer.Exit(EXIT_INVALID) from e


if __name__ == "__main__":
    app()
