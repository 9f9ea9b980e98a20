"""Largejoin command - join inputs larger than the zero copy buffer"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import typer
from rich.table import Table

from cojoin.bench.largejoin import largejoin
from cojoin.bench.report import write_csv
from cojoin.config import Algorithm, Architecture, Scheme, TableMode
from cojoin.engine.steps import pair_multiset, reference_join
from cojoin.utils.console import console, format_cell, print_error, print_info, print_success

from .common import (
    CONTEXT_SETTINGS,
    EXIT_RUNTIME,
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
    scheme_option,
    seed_option,
    selectivity_option,
    skew_option,
    table_mode_option,
)

LARGE_HEADER = (
    "r_size",
    "s_size",
    "buffer_limit",
    "in_buffer",
    "partition_bits",
    "pairs",
    "chunks",
    "copy",
    "partition",
    "join",
    "total",
    "results",
)

app = typer.Typer(
    help="Partition inputs through a bounded buffer, then join each partition pair",
    context_settings=CONTEXT_SETTINGS,
)


@app.callback(invoke_without_command=True)
def run_largejoin(
    buffer_limit: Optional[int] = typer.Option(None, "--buffer-limit", min=1, help="Buffer bytes (default from config)"),
    chunk_tuples: Optional[int] = typer.Option(None, "--chunk-tuples", min=1, help="Tuples partitioned per chunk"),
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
    verify: bool = typer.Option(False, "--verify", help="Compare the result with the reference join"),
    out: Optional[Path] = out_option(),
) -> None:
    """Out-of-buffer join with copy, partition and join times split"""
    if scheme is Scheme.BASIC_UNIT:
        raise typer.BadParameter("largejoin plans its pair joins; basicunit is not supported")
    with handle_errors():
        config = build_config(arch, table_mode, delta, block_size, groups, pass_bits, passes, seed)
        cpu, gpu = load_profiles(profile)
        inputs = make_inputs(r_file, s_file, r_size, s_size, skew, selectivity, config.bench.seed)
        R, S = inputs.load()
        print_info(f"Inputs: {inputs.describe()}")
        limit = buffer_limit or config.bench.buffer_limit
        report = largejoin(R, S, algo, scheme, config, cpu, gpu, limit, chunk_tuples, semantic=verify)

        table = Table(title="Large join", caption="times: logical seconds")
        table.add_column("Part", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("in buffer", "yes" if report.in_buffer else "no")
        table.add_row("partition bits", str(report.partition_bits))
        table.add_row("chunks", str(report.chunks))
        table.add_row("copy", format_cell(report.copy_time))
        table.add_row("partition", format_cell(report.partition_time))
        table.add_row("join", format_cell(report.join_time))
        table.add_row("total", format_cell(report.total))
        table.add_row("results", str(report.results))
        console.print(table)

        if out is not None:
            row = {
                "r_size": len(R),
                "s_size": len(S),
                "buffer_limit": limit,
                "in_buffer": report.in_buffer,
                "partition_bits": report.partition_bits,
                "pairs": report.pairs,
                "chunks": report.chunks,
                "copy": report.copy_time,
                "partition": report.partition_time,
                "join": report.join_time,
                "total": report.total,
                "results": report.results,
            }
            write_csv(out, LARGE_HEADER, [row])
            print_success(f"Row written to {out}")

    if verify:
        assert report.result_pairs is not None
        expected = pair_multiset(reference_join(R, S))
        if np.array_equal(pair_multiset(report.result_pairs), expected):
            print_success(f"Result matches the reference join ({len(expected)} pairs)")
        else:
            print_error(f"Result differs from the reference join: {len(report.result_pairs)} vs {len(expected)} pairs")
            raise typer.Exit(EXIT_RUNTIME)
