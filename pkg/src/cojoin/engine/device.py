"""Modeled compute devices, logical clocks and the emulated interconnect.

A profile gives per-step unit costs. ``instr_per_item`` and ``ipc`` are the
device's aggregate instruction rate, so ``item_cost`` is the device-wide
time per item; a single lane spends ``worker_count`` times that.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from cojoin.data.relation import Relation
from cojoin.errors import CalibrationError, MissingCalibrationError

from . import lockstep
from .steps import (
    BUILD_STEPS,
    CPU_SIDE,
    GPU_SIDE,
    PARTITION_STEPS,
    PROBE_STEPS,
    PartitionBuffers,
    StepContext,
    StepId,
    WorkGroup,
    new_result,
    new_table,
    partition_arena_capacity,
    run_step,
)

CALIBRATION_REPETITIONS = 9
CALIBRATION_RESIDENT = 64
NS = 1e-9


class DeviceKind(str, Enum):
    """Device families"""

    CPU = "cpu"  # Few wide-issue cores, no lockstep
    GPU = "gpu"  # Many lanes executing wavefronts in lockstep


class DeviceProfile(BaseModel):
    """Per-step unit costs and lockstep geometry of one device"""

    name: str
    kind: DeviceKind
    worker_count: int = Field(gt=0, description="Parallel lanes")
    wavefront_width: int = Field(default=1, ge=1, description="Items per lockstep group")
    ipc: float = Field(gt=0.0, description="Peak instructions per cycle, whole device")
    clock_hz: float = Field(gt=0.0, description="Nominal frequency")
    instr_per_item: dict[StepId, float] = Field(default_factory=dict)
    mem_cost_per_item: dict[StepId, float] = Field(
        default_factory=dict, description="Memory stall seconds per item, whole device"
    )
    atomic_cost: float = Field(default=0.0, ge=0.0, description="Seconds per global cursor grant")
    merge_cost_per_node: float = Field(default=0.0, ge=0.0, description="Seconds per merged key node")
    dispatch_overhead: float = Field(default=0.0, ge=0.0, description="Seconds per dispatched chunk")
    label: str = Field(default="canned", description="Where the costs came from")

    class Config:
        frozen = True

    @field_validator("instr_per_item", "mem_cost_per_item")
    @classmethod
    def _non_negative(cls, v: dict[StepId, float]) -> dict[StepId, float]:
        for step, cost in v.items():
            if cost < 0:
                raise ValueError(f"cost for {step.value} must be >= 0, got {cost}")
        return v

    @property
    def side(self) -> int:
        return CPU_SIDE if self.kind is DeviceKind.CPU else GPU_SIDE

    @property
    def slots(self) -> float:
        """Concurrent wavefront slots"""
        return self.worker_count / self.wavefront_width

    def _require(self, step: StepId) -> None:
        if step not in self.instr_per_item or step not in self.mem_cost_per_item:
            raise MissingCalibrationError(self.name, step.value)

    def compute_cost(self, step: StepId, units: float = 1.0) -> float:
        """Instruction time for `units` work units (device-wide)"""
        self._require(step)
        return self.instr_per_item[step] * units / (self.ipc * self.clock_hz)

    def memory_cost(self, step: StepId, units: float = 1.0) -> float:
        self._require(step)
        return self.mem_cost_per_item[step] * units

    def item_cost(self, step: StepId, units: float = 1.0) -> float:
        return self.compute_cost(step, units) + self.memory_cost(step, units)

    def lane_costs(self, step: StepId, units: np.ndarray) -> np.ndarray:
        """Time each item occupies its lane"""
        return np.asarray(units, dtype=np.float64) * (self.item_cost(step) * self.worker_count)

    def step_time(self, step: StepId, units: np.ndarray) -> float:
        return simulate_step(self, step, self.lane_costs(step, units))

    def with_costs(self, step: StepId, instr: float, mem: float, label: Optional[str] = None) -> DeviceProfile:
        """Copy with one step's costs replaced"""
        return self.model_copy(
            update={
                "instr_per_item": {**self.instr_per_item, step: instr},
                "mem_cost_per_item": {**self.mem_cost_per_item, step: mem},
                "label": label or self.label,
            }
        )

    def to_text(self) -> str:
        """Flat key=value form"""
        lines = [
            f"name={self.name}",
            f"kind={self.kind.value}",
            f"lanes={self.worker_count}",
            f"W={self.wavefront_width}",
            f"ipc={self.ipc!r}",
            f"clock_hz={self.clock_hz!r}",
            f"atomic_cost={self.atomic_cost!r}",
            f"merge_cost_per_node={self.merge_cost_per_node!r}",
            f"dispatch_overhead={self.dispatch_overhead!r}",
            f"label={self.label}",
        ]
        for step in self.instr_per_item:
            lines.append(f"instr.{step.value}={self.instr_per_item[step]!r}")
        for step in self.mem_cost_per_item:
            lines.append(f"mem.{step.value}={self.mem_cost_per_item[step]!r}")
        return "\n".join(lines) + "\n"


_SCALAR_KEYS: dict[str, str] = {
    "name": "name",
    "kind": "kind",
    "lanes": "worker_count",
    "W": "wavefront_width",
    "ipc": "ipc",
    "clock_hz": "clock_hz",
    "atomic_cost": "atomic_cost",
    "merge_cost_per_node": "merge_cost_per_node",
    "dispatch_overhead": "dispatch_overhead",
    "label": "label",
}


def parse_profile(text: str, base: Optional[DeviceProfile] = None) -> DeviceProfile:
    """Parse the key=value profile form; missing keys come from base.

    Raises:
        ValueError: Unknown key or malformed line
    """
    data: dict[str, object] = base.model_dump() if base is not None else {}
    instr: dict[StepId, float] = dict(base.instr_per_item) if base is not None else {}
    mem: dict[StepId, float] = dict(base.mem_cost_per_item) if base is not None else {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got '{raw}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("instr."):
            instr[StepId(key[6:])] = float(value)
        elif key.startswith("mem."):
            mem[StepId(key[4:])] = float(value)
        elif key in _SCALAR_KEYS:
            data[_SCALAR_KEYS[key]] = value
        else:
            raise ValueError(f"line {lineno}: unknown profile key '{key}'")
    data["instr_per_item"] = instr
    data["mem_cost_per_item"] = mem
    return DeviceProfile.model_validate(data)


def load_profile(path: Path, base: Optional[DeviceProfile] = None) -> DeviceProfile:
    """Load a profile file, filling gaps from the canned profile of its kind"""
    text = Path(path).read_text(encoding="utf-8")
    if base is None:
        kind = None
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line.startswith("kind="):
                kind = DeviceKind(line.split("=", 1)[1].strip())
        if kind is not None:
            cpu, gpu = canned_profiles()
            base = cpu if kind is DeviceKind.CPU else gpu
    return parse_profile(text, base)


def save_profile(profile: DeviceProfile, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(profile.to_text(), encoding="utf-8")


@dataclass(frozen=True)
class TransferLink:
    """Affine-cost interconnect between the devices"""

    latency: float = 0.015e-3
    bandwidth: float = 3 * 2**30
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.latency < 0:
            raise ValueError(f"latency must be >= 0, got {self.latency}")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")


COUPLED = TransferLink(enabled=False)


def transfer_time(link: Optional[TransferLink], size: float) -> float:
    """latency + size / bandwidth, or 0 for a disabled link"""
    if link is None or not link.enabled:
        return 0.0
    if size < 0:
        raise ValueError(f"size must be >= 0, got {size}")
    return link.latency + size / link.bandwidth


@dataclass
class LogicalClock:
    """Accumulated logical time per device with a labeled breakdown"""

    _now: dict[str, float] = field(default_factory=dict)
    _breakdown: dict[str, dict[str, float]] = field(default_factory=dict)

    def now(self, device: str) -> float:
        return self._now.get(device, 0.0)

    def charge(self, device: str, label: str, seconds: float) -> float:
        """Advance device by seconds under label; returns the new time"""
        if seconds < 0 or not np.isfinite(seconds):
            raise ValueError(f"charge must be finite and >= 0, got {seconds}")
        entries = self._breakdown.setdefault(device, {})
        entries[label] = entries.get(label, 0.0) + seconds
        self._now[device] = self.now(device) + seconds
        return self._now[device]

    def wait_until(self, device: str, t: float, label: str = "stall") -> float:
        """Idle until t; returns the stall length"""
        gap = t - self.now(device)
        if gap > 0:
            self.charge(device, label, gap)
            return gap
        return 0.0

    def breakdown(self, device: str) -> dict[str, float]:
        return dict(self._breakdown.get(device, {}))

    def total(self, device: str) -> float:
        return sum(self._breakdown.get(device, {}).values())

    def devices(self) -> list[str]:
        return list(self._now)


def simulate_step(profile: DeviceProfile, step: StepId, item_costs: np.ndarray) -> float:
    """Logical time of one step over items in input order.

    Wavefronts of width W cost their slowest item; wavefront time is spread
    over worker_count / W concurrent slots.
    """
    costs = np.asarray(item_costs, dtype=np.float64)
    if costs.size and (not np.all(np.isfinite(costs)) or costs.min() < 0):
        raise ValueError("item costs must be finite and >= 0")
    maxima = lockstep.wavefront_maxima(costs, profile.wavefront_width)
    return float(maxima.sum() / profile.slots)


# Canned profiles. CPU: 4 lanes at 3.0 GHz issuing 2 instr/cycle each, no
# lockstep. GPU: 400 lanes at 0.6 GHz, wavefronts of 64. Memory costs are
# device-wide seconds per item. Hash steps favor the GPU by over 15x; the
# list steps sit near parity once wavefront divergence is paid.
_CPU_INSTR = {
    StepId.B1: 48, StepId.B2: 24, StepId.B3: 36, StepId.B4: 36,
    StepId.P1: 48, StepId.P2: 24, StepId.P3: 36, StepId.P4: 48,
    StepId.N1: 12, StepId.N2: 12, StepId.N3: 24,
}  # fmt: skip
_CPU_MEM_NS = {
    StepId.B1: 1.1, StepId.B2: 13.0, StepId.B3: 8.5, StepId.B4: 15.9,
    StepId.P1: 1.1, StepId.P2: 13.0, StepId.P3: 7.2, StepId.P4: 18.0,
    StepId.N1: 0.53, StepId.N2: 6.5, StepId.N3: 8.97,
}  # fmt: skip
_GPU_INSTR = {
    StepId.B1: 40, StepId.B2: 24, StepId.B3: 36, StepId.B4: 36,
    StepId.P1: 40, StepId.P2: 24, StepId.P3: 36, StepId.P4: 48,
    StepId.N1: 12, StepId.N2: 12, StepId.N3: 24,
}  # fmt: skip
_GPU_MEM_NS = {
    StepId.B1: 0.015, StepId.B2: 10.58, StepId.B3: 3.022, StepId.B4: 13.32,
    StepId.P1: 0.015, StepId.P2: 10.58, StepId.P3: 2.565, StepId.P4: 15.53,
    StepId.N1: 0.01, StepId.N2: 5.284, StepId.N3: 7.74,
}  # fmt: skip


def canned_profiles() -> tuple[DeviceProfile, DeviceProfile]:
    """Built-in (cpu_like, gpu_like) profiles"""
    cpu = DeviceProfile(
        name="cpu-like",
        kind=DeviceKind.CPU,
        worker_count=4,
        wavefront_width=1,
        ipc=8.0,
        clock_hz=3.0e9,
        instr_per_item={k: float(v) for k, v in _CPU_INSTR.items()},
        mem_cost_per_item={k: v * NS for k, v in _CPU_MEM_NS.items()},
        atomic_cost=20 * NS,
        merge_cost_per_node=12 * NS,
        dispatch_overhead=2e-6,
    )
    gpu = DeviceProfile(
        name="gpu-like",
        kind=DeviceKind.GPU,
        worker_count=400,
        wavefront_width=64,
        ipc=400.0,
        clock_hz=0.6e9,
        instr_per_item={k: float(v) for k, v in _GPU_INSTR.items()},
        mem_cost_per_item={k: v * NS for k, v in _GPU_MEM_NS.items()},
        atomic_cost=60 * NS,
        merge_cost_per_node=12 * NS,
        dispatch_overhead=15e-6,
    )
    return cpu, gpu


def _prepare(step: StepId, sample: Relation, side: int) -> tuple[StepContext, list[StepId], StepId]:
    """Fresh context with every step before `step` of its series already run"""
    if step in BUILD_STEPS:
        ctx = StepContext.for_build(sample, new_table(sample.keys))
        series: tuple[StepId, ...] = BUILD_STEPS
    elif step in PROBE_STEPS:
        table = new_table(sample.keys)
        build = StepContext.for_build(sample, table)
        items = np.arange(len(sample), dtype=np.int64)
        for s in BUILD_STEPS:
            run_step(s, items, build, side)
        ctx = StepContext.for_probe(sample, table, new_result(sample.keys, sample.keys))
        series = PROBE_STEPS
    elif step in PARTITION_STEPS:
        from cojoin.memory.allocator import Arena

        buffers = PartitionBuffers(Arena(partition_arena_capacity(len(sample), 64, None)), 64, None)
        ctx = StepContext.for_partition(sample, buffers, 6)
        series = PARTITION_STEPS
    else:
        raise CalibrationError(f"step {step.label} cannot be calibrated on its own")
    before = list(series[: series.index(step)])
    return ctx, before, step


def _time_step(
    step: StepId, sample: Relation, side: int, timer: Callable[[], float]
) -> tuple[float, float]:
    """(host seconds, work units) of one micro-run of `step` on a fresh context"""
    ctx, before, target = _prepare(step, sample, side)
    items = np.arange(len(sample), dtype=np.int64)
    for s in before:
        run_step(s, items, ctx, side, WorkGroup())
    start = timer()
    run = run_step(target, items, ctx, side, WorkGroup())
    elapsed = timer() - start
    return elapsed, float(run.units.sum())


def calibrate(
    profile: DeviceProfile,
    step: StepId,
    sample: Relation,
    repetitions: int = CALIBRATION_REPETITIONS,
    timer: Callable[[], float] = time.perf_counter,
) -> DeviceProfile:
    """Recalibrate one step's unit costs from timed micro-runs on a sample.

    Every repetition times the step twice on fresh contexts: once on the
    first CALIBRATION_RESIDENT tuples, whose structures stay cache
    resident, and once on the whole sample. The resident time per unit is
    taken as instruction time and sets ``instr_per_item``; what the whole
    sample adds on top of it is memory stall time. The unit is one work
    unit, so workload-dependent steps (key-list traversal) are calibrated
    per key search. The host thread stands in for one lane, so costs are
    divided by ``worker_count`` to get the device-wide time per item.

    Args:
        profile: Profile to update
        step: Step to calibrate
        sample: Sample relation (also used as its own probe input)
        repetitions: Measurements whose median is taken
        timer: Host clock

    Returns:
        Profile with the step's costs replaced

    Raises:
        CalibrationError: Fewer sample tuples than repetitions, or a micro-run without work
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if len(sample) < repetitions:
        raise CalibrationError(
            f"sample of {len(sample)} tuples is too small for a median of {repetitions} runs"
        )
    side = profile.side
    resident = sample.take(np.arange(min(len(sample), CALIBRATION_RESIDENT), dtype=np.int64))
    warm: list[float] = []
    full: list[float] = []
    for _ in range(repetitions):
        for rel, out in ((resident, warm), (sample, full)):
            elapsed, units = _time_step(step, rel, side, timer)
            if units <= 0:
                raise CalibrationError(f"step {step.label} did no work on the sample")
            out.append(max(0.0, elapsed) / units / profile.worker_count)

    compute = statistics.median(warm)
    mem = max(0.0, statistics.median(full) - compute)
    instr = compute * profile.ipc * profile.clock_hz
    return profile.with_costs(step, instr, mem, "calibrated (wall clock)")
