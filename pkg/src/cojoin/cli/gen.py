"""Gen command - generate relation files"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from cojoin.data.relation import (
    KEY_DOMAIN,
    Distribution,
    GenSpec,
    generate,
    read_bin,
    sidecar_path,
    write_bin,
    write_sidecar,
)
from cojoin.utils.console import print_dim, print_success

from .common import CONTEXT_SETTINGS, handle_errors

app = typer.Typer(
    help="Generate a relation file (HJRL binary format with a YAML sidecar)",
    # Options may follow the output path
    context_settings={**CONTEXT_SETTINGS, "allow_interspersed_args": True},
)


@app.callback(invoke_without_command=True)
def gen(
    out: Path = typer.Argument(..., help="Relation file to write"),
    n: int = typer.Option(65536, "--n", "-n", min=0, help="Number of tuples"),
    dist: Distribution = typer.Option(Distribution.UNIFORM, "--dist", help="Key distribution"),
    skew: int = typer.Option(0, "--skew", min=0, max=100, help="Percent of duplicate tuples (skewed only)"),
    key_min: int = typer.Option(KEY_DOMAIN[0], "--key-min", min=0, help="Smallest key"),
    key_max: int = typer.Option(KEY_DOMAIN[1], "--key-max", min=0, help="Largest key"),
    seed: int = typer.Option(42, "--seed", min=0, help="RNG seed"),
    probe_of: Optional[Path] = typer.Option(
        None,
        "--probe-of",
        help="Generate a probe relation against this build relation file",
    ),
    selectivity: float = typer.Option(
        1.0,
        "--selectivity",
        min=0.0,
        max=1.0,
        help="Fraction of matching tuples (with --probe-of)",
    ),
) -> None:
    """Generate a build or probe relation"""
    if skew and dist is not Distribution.SKEWED:
        raise typer.BadParameter("--skew needs --dist skewed")
    with handle_errors():
        build = read_bin(probe_of) if probe_of is not None else None
        spec = GenSpec(
            n,
            dist,
            skew,
            key_range=(key_min, key_max),
            seed=seed,
            selectivity=selectivity if build is not None else None,
        )
        if build is not None:
            spec.extra["probe_of"] = str(probe_of)
        rel = generate(spec, build)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_bin(out, rel)
        write_sidecar(out, spec)
    print_success(f"Wrote {len(rel)} tuples to {out}")
    print_dim(f"Metadata: {sidecar_path(out)}")
