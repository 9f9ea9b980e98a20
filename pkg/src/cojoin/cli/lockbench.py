"""Lockbench command - latch micro-benchmark"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from cojoin.bench.lockbench import DISTRIBUTIONS, LOCK_HEADER, lockbench_grid
from cojoin.bench.report import write_csv
from cojoin.utils.console import print_error, print_rows, print_success

from .common import CONTEXT_SETTINGS, EXIT_RUNTIME, handle_errors, out_option, parse_values

app = typer.Typer(
    help="K threads perform X latched increments on N counters",
    context_settings=CONTEXT_SETTINGS,
)


@app.callback(invoke_without_command=True)
def run_lockbench(
    sizes: str = typer.Option("1,16,256,4096,65536", "--sizes", help="Comma-separated counter counts N"),
    threads: int = typer.Option(256, "--threads", "-k", min=1, help="Threads K"),
    increments: int = typer.Option(1 << 20, "--increments", "-x", min=1, help="Total increments X"),
    dist: Optional[list[str]] = typer.Option(
        None, "--dist", help=f"Distribution, repeatable: {', '.join(DISTRIBUTIONS)}"
    ),
    seed: int = typer.Option(42, "--seed", min=0, help="Seed of the slot draws"),
    out: Optional[Path] = out_option(),
) -> None:
    """Run the benchmark grid; elapsed times are measured (wall clock)"""
    counts = [int(v) for v in parse_values(sizes) or []]
    if not counts or min(counts) < 1:
        raise typer.BadParameter("--sizes needs counts >= 1")
    with handle_errors():
        rows = lockbench_grid(counts, threads, increments, dist, seed)
    print_rows(
        "Lock micro-benchmark",
        LOCK_HEADER,
        [[getattr(r, c) for c in LOCK_HEADER] for r in rows],
        caption="elapsed: measured (wall clock) seconds",
    )
    if out is not None:
        write_csv(out, LOCK_HEADER, [r.as_dict() for r in rows])
        print_success(f"{len(rows)} rows written to {out}")
    broken = [r for r in rows if not r.conserved]
    if broken:
        print_error(f"{len(broken)} cell(s) lost or tore increments")
        raise typer.Exit(EXIT_RUNTIME)
