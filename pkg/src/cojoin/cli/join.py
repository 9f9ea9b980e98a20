"""Join command - plan and execute one co-processed join"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import typer
from rich.table import Table

from cojoin.bench.report import ResultRow, print_result_rows, write_rows
from cojoin.config import Algorithm, Architecture, Scheme, TableMode
from cojoin.engine.costmodel import estimate_row, write_estimates_csv
from cojoin.engine.scheduler import ExecutionReport, Plan, plan_config, predict_plan, run_join
from cojoin.engine.steps import pair_multiset, reference_join
from cojoin.engine.workload import build_join_workload
from cojoin.utils.console import console, format_cell, print_error, print_info, print_success, print_warning

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
    handoff_cap_option,
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

app = typer.Typer(
    help="Plan and execute one join, reporting logical times",
    context_settings=CONTEXT_SETTINGS,
)


def _phase_table(report: ExecutionReport) -> Table:
    table = Table(title=f"{report.plan.algorithm.value.upper()}-{report.plan.scheme.value.upper()} phases")
    table.add_column("Phase", style="cyan")
    table.add_column("CPU share")
    table.add_column("Predicted")
    table.add_column("Measured")
    table.add_column("Stall")
    table.add_column("Transfer")
    for p in report.phases:
        ratios = " ".join(f"{v:g}" for v in p.ratios) if p.ratios else "-"
        table.add_row(
            p.phase,
            ratios,
            format_cell(p.predicted),
            format_cell(p.time),
            format_cell(p.stall),
            format_cell(p.transfer),
        )
    return table


@app.callback(invoke_without_command=True)
def join(
    algo: Algorithm = algo_option(),
    scheme: Scheme = scheme_option(),
    arch: Optional[Architecture] = arch_option(),
    table_mode: Optional[TableMode] = table_mode_option(),
    delta: Optional[float] = delta_option(),
    block_size: Optional[int] = block_size_option(),
    groups: Optional[int] = groups_option(),
    pass_bits: Optional[int] = pass_bits_option(),
    passes: Optional[int] = passes_option(),
    handoff_cap: Optional[int] = handoff_cap_option(),
    seed: Optional[int] = seed_option(),
    profile: Optional[list[Path]] = profile_option(),
    r_file: Optional[Path] = r_file_option(),
    s_file: Optional[Path] = s_file_option(),
    r_size: int = r_size_option(),
    s_size: int = s_size_option(),
    skew: int = skew_option(),
    selectivity: float = selectivity_option(),
    chunk_size: Optional[int] = typer.Option(None, "--chunk-size", min=1, help="BasicUnit chunk size in tuples"),
    plan_file: Optional[Path] = typer.Option(None, "--plan-file", help="Execute a saved plan instead of searching"),
    save_plan: Optional[Path] = typer.Option(None, "--save-plan", help="Write the executed plan to this file"),
    estimates: Optional[Path] = typer.Option(None, "--estimates", help="Write per-step cost estimates as CSV"),
    verify: bool = typer.Option(False, "--verify", help="Compare the result with the reference join"),
    out: Optional[Path] = out_option(),
) -> None:
    """Run one join and print its phase breakdown"""
    if chunk_size is not None and scheme is not Scheme.BASIC_UNIT:
        raise typer.BadParameter("--chunk-size is only valid with --scheme basicunit")

    with handle_errors():
        config = build_config(arch, table_mode, delta, block_size, groups, pass_bits, passes, seed, handoff_cap)
        cpu, gpu = load_profiles(profile)
        inputs = make_inputs(r_file, s_file, r_size, s_size, skew, selectivity, config.bench.seed)
        R, S = inputs.load()
        print_info(f"Inputs: {inputs.describe()}")
        plan = Plan.load(plan_file) if plan_file is not None else None
        report = run_join(algo, scheme, R, S, config, cpu, gpu, plan=plan, chunk_size=chunk_size)
        config = plan_config(config, report.plan)
        if report.plan.budget_exceeded:
            print_warning("PL search budget exceeded; the plan is the best of the kept prefixes")

        console.print(_phase_table(report))
        row = ResultRow.from_report("join", report, len(R), len(S), config)
        print_result_rows("Join", [row])
        print_info(f"Results: {report.result_count}")

        if save_plan is not None:
            report.plan.save(save_plan)
            print_success(f"Plan saved to {save_plan}")
        if estimates is not None:
            workload = build_join_workload(
                report.plan.algorithm,
                R,
                S,
                config,
                coarse=report.plan.scheme is Scheme.COARSE_PL,
                devices=(cpu, gpu),
            )
            est = predict_plan(report.plan, workload, cpu, gpu, config)
            write_estimates_csv(estimates, [estimate_row(f"{report.plan.scheme.value}:{ph}", e) for ph, e in est.items()])
            print_success(f"Estimates written to {estimates}")
        if out is not None:
            write_rows(out, [row])
            print_success(f"Rows written to {out}")

    if verify:
        assert report.result is not None
        expected = pair_multiset(reference_join(R, S))
        if np.array_equal(report.result.multiset(), expected):
            print_success(f"Result matches the reference join ({len(expected)} pairs)")
        else:
            print_error(f"Result differs from the reference join: {len(report.result)} vs {len(expected)} pairs")
            raise typer.Exit(EXIT_RUNTIME)
