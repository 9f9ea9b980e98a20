"""CLI main entry point"""

from __future__ import annotations

import sys
from typing import Optional, Sequence

import click
import typer

from cojoin.cli import calibrate, config_cmd, gen, join, largejoin, lockbench, montecarlo, sweep
from cojoin.cli.common import CONTEXT_SETTINGS, EXIT_USAGE

app = typer.Typer(
    name="cojoin",
    help="cojoin - hash joins co-processed on a modeled CPU/GPU pair",
    add_completion=False,
    no_args_is_help=True,
    context_settings=CONTEXT_SETTINGS,
)

app.add_typer(gen.app, name="gen")
app.add_typer(join.app, name="join")
app.add_typer(sweep.app, name="sweep")
app.add_typer(montecarlo.app, name="montecarlo")
app.add_typer(calibrate.app, name="calibrate")
app.add_typer(lockbench.app, name="lockbench")
app.add_typer(largejoin.app, name="largejoin")
app.add_typer(config_cmd.app, name="config")


@app.command()
def version() -> None:
    """Show version information"""
    from cojoin import __version__
    from cojoin.utils.console import console

    console.print(f"[bold green]cojoin[/bold green] version {__version__}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code.

    0 on success, 1 on usage errors, 2 on runtime errors.
    """
    args = list(argv) if argv is not None else sys.argv[1:]
    try:
        result = app(args=args, prog_name="cojoin", standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.exceptions.Exit as e:
        return e.exit_code
    return result if isinstance(result, int) else 0


def cli() -> None:
    """CLI entry point"""
    sys.exit(run())


if __name__ == "__main__":
    cli()
