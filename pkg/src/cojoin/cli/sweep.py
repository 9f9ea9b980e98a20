"""Sweep command - one join per value of a parameter"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from cojoin.bench.report import print_result_rows, write_rows
from cojoin.bench.sweep import SweepAxis, sweep
from cojoin.config import Algorithm, Architecture, Scheme, TableMode
from cojoin.utils.console import print_info, print_success

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
    parse_values,
    pass_bits_option,
    passes_option,
    profile_option,
    r_file_option,
    r_size_option,
    s_file_option,
    s_size_option,
    scheme_option,
    seed_option,
    selectivity_option,
    skew_option,
    table_mode_option,
)

app = typer.Typer(
    help="Sweep ratio, block size, selectivity, build size or groups",
    context_settings=CONTEXT_SETTINGS,
)


@app.callback(invoke_without_command=True)
def run_sweep(
    over: SweepAxis = typer.Option(SweepAxis.RATIO, "--over", help="Swept parameter"),
    values: Optional[str] = typer.Option(None, "--values", help="Comma-separated axis values"),
    algo: Algorithm = algo_option(),
    scheme: Scheme = scheme_option(),
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
    """Sweep one axis; the fastest point is highlighted"""
    points = parse_values(values)
    if r_file is not None and over in (SweepAxis.SELECTIVITY, SweepAxis.BUILD_SIZE):
        raise typer.BadParameter(f"--over {over.value} generates its inputs; drop --r/--s")
    with handle_errors():
        config = build_config(arch, table_mode, delta, block_size, groups, pass_bits, passes, seed)
        cpu, gpu = load_profiles(profile)
        inputs = make_inputs(r_file, s_file, r_size, s_size, skew, selectivity, config.bench.seed)
        print_info(f"Inputs: {inputs.describe()}")
        rows = sweep(over, inputs, algo, scheme, config, cpu, gpu, points)
        print_result_rows(f"Sweep over {over.value}", rows)
        if out is not None:
            write_rows(out, rows)
            print_success(f"{len(rows)} rows written to {out}")
