"""Root CLI app composing all devtools sub-apps.

All development tooling is exposed as the ``matconc-devtools`` entry point.
Each sub-app groups related commands.

Examples::

    $ uv run matconc-devtools --help
    $ uv run matconc-devtools reports list
    $ uv run matconc-devtools reports show bernstein-sign-fixed
    $ uv run matconc-devtools reports table bernstein-sign-fixed bernstein_tail
"""

import typer

from matconc.devtools.reports import app as reports_app

app = typer.Typer(
    help="matconc-devtools: report inspection tools",
    pretty_exceptions_show_locals=False,
    no_args_is_help=True,
)

app.add_typer(reports_app, name="reports", help="Inspect emitted reports")
