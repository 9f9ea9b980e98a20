"""Calibrate command - fit per-step costs of a device profile"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from cojoin.data.relation import gen_uniform
from cojoin.engine.device import (
    CALIBRATION_REPETITIONS,
    DeviceKind,
    calibrate,
    canned_profiles,
    load_profile,
    save_profile,
)
from cojoin.engine.steps import FINE_STEPS, StepId
from cojoin.utils.console import console, format_cell, print_success

from .common import CONTEXT_SETTINGS, handle_errors

app = typer.Typer(
    help="Calibrate step costs of a device profile on a sample relation",
    context_settings=CONTEXT_SETTINGS,
)


@app.callback(invoke_without_command=True)
def run_calibrate(
    device: DeviceKind = typer.Option(DeviceKind.CPU, "--device", help="Profile to calibrate"),
    step: Optional[list[StepId]] = typer.Option(None, "--step", help="Step to calibrate (repeatable; default all)"),
    sample_size: int = typer.Option(4096, "--sample-size", min=1, help="Sample tuples"),
    repetitions: int = typer.Option(
        CALIBRATION_REPETITIONS, "--repetitions", min=1, help="Measurements per step (median taken)"
    ),
    profile: Optional[Path] = typer.Option(None, "--profile", help="Start from this profile file"),
    seed: int = typer.Option(42, "--seed", min=0, help="Sample seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the calibrated profile here"),
) -> None:
    """Recalibrate step costs from timed micro-runs of the step kernels"""
    steps = step or list(FINE_STEPS)
    with handle_errors():
        cpu, gpu = canned_profiles()
        base = cpu if device is DeviceKind.CPU else gpu
        current = load_profile(profile, base) if profile is not None else base
        sample = gen_uniform(sample_size, seed=seed)
        for s in steps:
            current = calibrate(current, s, sample, repetitions)

        table = Table(title=f"Calibrated {current.name}", caption="seconds per work unit, measured (wall clock)")
        table.add_column("Step", style="cyan")
        table.add_column("Compute")
        table.add_column("Memory", style="green")
        for s in steps:
            table.add_row(s.label, format_cell(current.compute_cost(s)), format_cell(current.memory_cost(s)))
        console.print(table)

        if out is not None:
            save_profile(current, out)
            print_success(f"Profile written to {out}")
