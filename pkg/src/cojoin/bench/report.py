"""Result rows of join experiments and their CSV and console forms"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from cojoin.config.schema import EngineConfig
from cojoin.engine.scheduler import ExecutionReport
from cojoin.utils.console import print_rows

# Columns shown in console tables; the CSV carries every field
CONSOLE_COLUMNS = (
    "experiment",
    "param",
    "scheme",
    "predicted",
    "measured",
    "rel_error",
    "transfer",
    "stall",
    "results",
)


@dataclass
class ResultRow:
    """One executed join of an experiment. Times are logical seconds."""

    experiment: str
    algorithm: str = ""
    scheme: str = ""
    arch: str = ""
    table_mode: str = ""
    r_size: int = 0
    s_size: int = 0
    block_size: int = 0
    groups: int = 1
    param: str = ""
    partition: float = 0.0
    build: float = 0.0
    probe: float = 0.0
    merge: float = 0.0
    join: float = 0.0
    transfer: float = 0.0
    stall: float = 0.0
    predicted: float = 0.0
    measured: float = 0.0
    rel_error: float = 0.0
    lock_overhead: float = 0.0
    results: int = 0
    realized_ratio: float = 0.0
    global_ops: int = 0
    argmin: bool = False

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError(f"column '{f.name}' is not finite: {value}")

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_report(
        cls,
        experiment: str,
        report: ExecutionReport,
        r_size: int,
        s_size: int,
        config: EngineConfig,
        param: str = "",
    ) -> ResultRow:
        """Flatten an execution report"""
        plan = report.plan
        return cls(
            experiment=experiment,
            algorithm=plan.algorithm.value,
            scheme=plan.scheme.value,
            arch=plan.architecture.value,
            table_mode=plan.table_mode.value,
            r_size=r_size,
            s_size=s_size,
            block_size=config.allocator.block_size,
            groups=config.scheduler.groups,
            param=param,
            partition=report.partition_time,
            build=report.build_time,
            probe=report.probe_time,
            merge=report.merge_time,
            join=report.join_time,
            transfer=report.transfer,
            stall=report.stall,
            predicted=report.predicted,
            measured=report.measured,
            rel_error=report.relative_error,
            lock_overhead=report.lock_overhead,
            results=report.result_count,
            realized_ratio=report.realized_ratio,
            global_ops=report.global_ops,
        )

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def mark_argmin(rows: Sequence[ResultRow]) -> Optional[int]:
    """Flag the row with the smallest measured time (first on ties)"""
    if not rows:
        return None
    best = min(range(len(rows)), key=lambda i: rows[i].measured)
    for i, row in enumerate(rows):
        row.argmin = i == best
    return best


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> Path:
    """Write rows under a fixed header. Floats keep full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(header), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    return path


def write_rows(path: Path, rows: Sequence[ResultRow]) -> Path:
    return write_csv(path, ResultRow.header(), [r.as_dict() for r in rows])


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _cell(value: Any) -> Any:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def print_result_rows(title: str, rows: Sequence[ResultRow], caption: Optional[str] = None) -> None:
    """Console table of result rows, argmin row highlighted"""
    highlight = next((i for i, r in enumerate(rows) if r.argmin), None)
    table = [[getattr(r, c) for c in CONSOLE_COLUMNS] for r in rows]
    print_rows(title, CONSOLE_COLUMNS, table, highlight=highlight, caption=caption or "times: logical seconds")
