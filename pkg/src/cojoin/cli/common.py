"""Options and helpers shared by the subcommands"""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

import typer
from pydantic import ValidationError

from cojoin.bench.inputs import JoinInputs
from cojoin.config import Algorithm, Architecture, EngineConfig, Scheme, TableMode, load_config
from cojoin.engine.device import DeviceKind, DeviceProfile, canned_profiles, load_profile
from cojoin.errors import CojoinError
from cojoin.utils.console import print_dim, print_error

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}

# Exit codes
EXIT_USAGE = 1
EXIT_RUNTIME = 2


@contextmanager
def handle_errors() -> Iterator[None]:
    """Map engine errors to exit code 2 and bad values to exit code 1"""
    try:
        yield
    except CojoinError as e:
        print_error(str(e))
        if e.suggestion:
            print_dim(f"Suggestion: {e.suggestion}")
        raise typer.Exit(EXIT_RUNTIME) from None
    except (ValidationError, ValueError) as e:
        print_error(str(e))
        raise typer.Exit(EXIT_USAGE) from None
    except OSError as e:
        print_error(str(e))
        raise typer.Exit(EXIT_RUNTIME) from None


# Option factories, so every subcommand spells a flag the same way


def algo_option() -> Any:
    return typer.Option(Algorithm.SHJ, "--algo", help="Join algorithm")


def scheme_option(default: Scheme = Scheme.PL) -> Any:
    return typer.Option(default, "--scheme", help="Co-processing scheme")


def arch_option() -> Any:
    return typer.Option(None, "--arch", help="Memory architecture (default from config)")


def table_mode_option() -> Any:
    return typer.Option(None, "--table-mode", help="Hash table sharing (default from config)")


def delta_option() -> Any:
    return typer.Option(None, "--delta", min=1e-6, max=1.0, help="Ratio grid step")


def block_size_option() -> Any:
    return typer.Option(None, "--block-size", min=0, help="Allocator block size in bytes (0: basic allocator)")


def groups_option() -> Any:
    return typer.Option(None, "--groups", min=1, help="Workload groups of the probe series")


def pass_bits_option() -> Any:
    return typer.Option(None, "--pass-bits", min=0, max=16, help="Radix bits per partitioning pass")


def passes_option() -> Any:
    return typer.Option(None, "--passes", min=0, max=8, help="Partitioning passes")


def handoff_cap_option() -> Any:
    return typer.Option(None, "--handoff-cap", min=1, help="Handoff queue capacity in blocks")


def seed_option() -> Any:
    return typer.Option(None, "--seed", min=0, help="RNG seed")


def profile_option() -> Any:
    return typer.Option(None, "--profile", help="Device profile file (repeat for both devices)")


def out_option() -> Any:
    return typer.Option(None, "--out", "-o", help="Write rows to this CSV file")


def r_file_option() -> Any:
    return typer.Option(None, "--r", help="Build relation file (generated when omitted)")


def s_file_option() -> Any:
    return typer.Option(None, "--s", help="Probe relation file (generated when omitted)")


def r_size_option(default: int = 65536) -> Any:
    return typer.Option(default, "--r-size", min=0, help="Generated build tuples")


def s_size_option(default: int = 65536) -> Any:
    return typer.Option(default, "--s-size", min=0, help="Generated probe tuples")


def skew_option() -> Any:
    return typer.Option(0, "--skew", min=0, max=100, help="Percent of duplicated build keys")


def selectivity_option() -> Any:
    return typer.Option(1.0, "--selectivity", min=0.0, max=1.0, help="Fraction of matching probe tuples")


def build_config(
    arch: Optional[Architecture] = None,
    table_mode: Optional[TableMode] = None,
    delta: Optional[float] = None,
    block_size: Optional[int] = None,
    groups: Optional[int] = None,
    pass_bits: Optional[int] = None,
    passes: Optional[int] = None,
    seed: Optional[int] = None,
    handoff_cap: Optional[int] = None,
) -> EngineConfig:
    """Load configuration files and environment, then apply CLI flags"""
    data = load_config().model_dump()
    if arch is not None:
        data["architecture"] = Architecture(arch)
    if table_mode is not None:
        data["table_mode"] = TableMode(table_mode)
    for section, name, value in (
        ("scheduler", "delta", delta),
        ("allocator", "block_size", block_size),
        ("scheduler", "groups", groups),
        ("partition", "pass_bits", pass_bits),
        ("partition", "passes", passes),
        ("bench", "seed", seed),
        ("scheduler", "handoff_cap", handoff_cap),
    ):
        if value is not None:
            data[section][name] = value
    return EngineConfig.model_validate(data)


def load_profiles(paths: Optional[list[Path]]) -> tuple[DeviceProfile, DeviceProfile]:
    """Canned profiles, each replaced by a loaded file of the same kind"""
    cpu, gpu = canned_profiles()
    for path in paths or []:
        profile = load_profile(path)
        if profile.kind is DeviceKind.CPU:
            cpu = profile
        else:
            gpu = profile
    return cpu, gpu


def make_inputs(
    r_path: Optional[Path],
    s_path: Optional[Path],
    r_size: int,
    s_size: int,
    skew: int,
    selectivity: float,
    seed: int,
) -> JoinInputs:
    if (r_path is None) != (s_path is None):
        raise typer.BadParameter("--r and --s must be given together")
    return JoinInputs(r_size, s_size, skew, selectivity, seed, r_path, s_path)


def parse_values(text: Optional[str]) -> Optional[list[float]]:
    """Comma-separated numbers"""
    if not text:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got '{text}'") from None
