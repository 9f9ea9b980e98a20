"""cojoin CLI entry point for python -m cojoin"""

from cojoin.cli.main import cli

if __name__ == "__main__":
    cli()
