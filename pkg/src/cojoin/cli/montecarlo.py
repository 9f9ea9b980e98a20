"""Montecarlo command - validate the cost model against random plans"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from cojoin.bench.montecarlo import CDF_HEADER, ERROR_TOLERANCE, montecarlo
from cojoin.bench.report import write_csv
from cojoin.config import Algorithm, Architecture, TableMode
from cojoin.utils.console import console, format_cell, print_info, print_success

from .common import (
    CONTEXT_SETTINGS,
    algo_option,
    arch_option,
    block_size_option,
    build_config,
    delta_option,
    groups_option,
    handle_errors,
    load_profiles,
    make_inputs,
    out_option,
    pass_bits_option,
    passes_option,
    profile_option,
    r_file_option,
    r_size_option,
    s_file_option,
    s_size_option,
    seed_option,
    selectivity_option,
    skew_option,
    table_mode_option,
)

app = typer.Typer(
    help="Monte-Carlo runs of random ratio vectors against the searched plan",
    context_settings=CONTEXT_SETTINGS,
)


@app.callback(invoke_without_command=True)
def run_montecarlo(
    runs: Optional[int] = typer.Option(None, "--runs", min=1, help="Random ratio vectors (default from config)"),
    phase: Optional[str] = typer.Option(None, "--phase", help="Only this phase, e.g. build or probe"),
    algo: Algorithm = algo_option(),
    arch: Optional[Architecture] = arch_option(),
    table_mode: Optional[TableMode] = table_mode_option(),
    delta: Optional[float] = delta_option(),
    block_size: Optional[int] = block_size_option(),
    groups: Optional[int] = groups_option(),
    pass_bits: Optional[int] = pass_bits_option(),
    passes: Optional[int] = passes_option(),
    seed: Optional[int] = seed_option(),
    profile: Optional[list[Path]] = profile_option(),
    r_file: Optional[Path] = r_file_option(),
    s_file: Optional[Path] = s_file_option(),
    r_size: int = r_size_option(),
    s_size: int = s_size_option(),
    skew: int = skew_option(),
    selectivity: float = selectivity_option(),
    out: Optional[Path] = out_option(),
) -> None:
    """Draw random plans, time them and place the searched plan in their CDF"""
    with handle_errors():
        config = build_config(arch, table_mode, delta, block_size, groups, pass_bits, passes, seed)
        cpu, gpu = load_profiles(profile)
        inputs = make_inputs(r_file, s_file, r_size, s_size, skew, selectivity, config.bench.seed)
        print_info(f"Inputs: {inputs.describe()}")
        result = montecarlo(inputs, algo, runs or config.bench.runs, phase, config, cpu, gpu)

        table = Table(title="Monte-Carlo summary", caption="times: logical seconds")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("phases", ", ".join(result.phases))
        table.add_row("runs", str(len(result.runs)))
        table.add_row("searched measured", format_cell(result.searched.measured))
        table.add_row("searched predicted", format_cell(result.searched.predicted))
        table.add_row("searched percentile", f"{result.percentile:.3f}")
        table.add_row("5th percentile measured", format_cell(result.measured_quantile(0.05)))
        table.add_row("median measured", format_cell(result.measured_quantile(0.5)))
        table.add_row(f"runs with error < {ERROR_TOLERANCE:.0%}", f"{result.within_tolerance:.1%}")
        console.print(table)

        if out is not None:
            write_csv(out, CDF_HEADER, result.rows())
            print_success(f"{len(result.runs) + 1} rows written to {out}")
