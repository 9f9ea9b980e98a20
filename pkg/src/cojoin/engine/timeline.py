"""Chunk-granular logical execution of step series on the two devices.

At step i the CPU owns the item prefix [0, a_i) and the GPU the suffix
[a_i, x), with a_i = round(r_i * x). Each device walks its range in
ascending chunks; a chunk starts once the device is free and every item
in it has been produced by step i-1, on either device. The gap is a stall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cojoin.memory.allocator import DEFAULT_BLOCK_SIZE

from . import lockstep
from .device import DeviceProfile, LogicalClock, TransferLink, transfer_time
from .workload import SeriesWorkload

CPU = "cpu"
GPU = "gpu"
STALL = "stall"
TRANSFER = "transfer"


@dataclass(frozen=True)
class TimelineOptions:
    """Dispatch and link settings of a simulated run"""

    dispatch_items: int = 1024
    max_chunks: int = 256
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE
    link: Optional[TransferLink] = None

    @property
    def discrete(self) -> bool:
        return self.link is not None and self.link.enabled


@dataclass
class DeviceTiming:
    """One device's share of a phase"""

    steps: dict[str, float] = field(default_factory=dict)
    stall: float = 0.0
    transfer: float = 0.0
    items: int = 0

    @property
    def busy(self) -> float:
        return sum(self.steps.values())

    @property
    def total(self) -> float:
        return self.busy + self.stall + self.transfer

    @classmethod
    def from_clock(cls, clock: LogicalClock, device: str, items: int) -> DeviceTiming:
        entries = clock.breakdown(device)
        stall = entries.pop(STALL, 0.0)
        transfer = entries.pop(TRANSFER, 0.0)
        return cls(steps=entries, stall=stall, transfer=transfer, items=items)


@dataclass
class SeriesTiming:
    """Logical timing of one phase"""

    phase: str
    cpu: DeviceTiming
    gpu: DeviceTiming
    global_ops: int = 0

    @property
    def time(self) -> float:
        return max(self.cpu.total, self.gpu.total)

    @property
    def transfer(self) -> float:
        return self.cpu.transfer + self.gpu.transfer

    @property
    def stall(self) -> float:
        return self.cpu.stall + self.gpu.stall

    @property
    def realized_ratio(self) -> float:
        """Fraction of item-steps run on the CPU"""
        done = self.cpu.items + self.gpu.items
        return self.cpu.items / done if done else 0.0


def dispatch_granularity(x: int, cpu: DeviceProfile, gpu: DeviceProfile, opts: TimelineOptions) -> int:
    """Chunk size: a multiple of both wavefront widths, at most max_chunks per range"""
    width = math.lcm(cpu.wavefront_width, gpu.wavefront_width)
    gran = max(opts.dispatch_items, -(-x // opts.max_chunks), 1)
    return -(-gran // width) * width


def splits_of(ratios: Sequence[float], x: int) -> list[int]:
    out = []
    for r in ratios:
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"ratios must lie in [0, 1], got {r}")
        out.append(int(round(r * x)))
    return out


def _grants(alloc: np.ndarray, rel: np.ndarray, block_size: Optional[int]) -> np.ndarray:
    if block_size is None:
        return np.add.reduceat((alloc > 0).astype(np.int64), rel)
    per_chunk = np.add.reduceat(alloc, rel)
    return -(-per_chunk // block_size)


def simulate_series(
    workload: SeriesWorkload,
    ratios: Sequence[float],
    cpu: DeviceProfile,
    gpu: DeviceProfile,
    opts: Optional[TimelineOptions] = None,
) -> SeriesTiming:
    """Simulate one pipelined step series.

    Args:
        workload: Per-item work of the series
        ratios: CPU share at each step
        cpu: CPU-like profile
        gpu: GPU-like profile
        opts: Dispatch and link settings

    Returns:
        Per-device timing of the phase
    """
    opts = opts or TimelineOptions()
    steps = workload.steps
    if len(ratios) != len(steps):
        raise ValueError(f"phase '{workload.phase}' needs {len(steps)} ratios, got {len(ratios)}")
    x = workload.x
    splits = splits_of(ratios, x)
    clock = LogicalClock()
    clock.charge(CPU, STALL, 0.0)
    clock.charge(GPU, STALL, 0.0)
    link = opts.link if opts.discrete else None
    gran = dispatch_granularity(x, cpu, gpu, opts)
    ready = np.zeros(x, dtype=np.float64)
    owner = np.full(x, -1, dtype=np.int8)
    items = [0, 0]
    global_ops = 0

    if link is not None and workload.upload_input and x - splits[0] > 0:
        clock.charge(GPU, TRANSFER, transfer_time(link, (x - splits[0]) * workload.item_bytes))

    for i, step in enumerate(steps):
        a = splits[i]
        for side, (name, dev) in enumerate(((CPU, cpu), (GPU, gpu))):
            lo, hi = (0, a) if side == 0 else (a, x)
            if hi <= lo:
                continue
            starts = np.arange(lo, hi, gran, dtype=np.int64)
            rel = starts - lo
            lanes = workload.lane_costs(step, dev, lo, hi)
            compute = lockstep.segment_lockstep(lanes, rel, dev.wavefront_width) / dev.slots
            grants = _grants(workload.alloc_bytes[step][lo:hi], rel, opts.block_size)
            global_ops += int(grants.sum())
            work = compute + grants * dev.atomic_cost

            xfer = np.zeros(starts.size, dtype=np.float64)
            if link is not None and i > 0:
                foreign = np.add.reduceat((owner[lo:hi] == 1 - side).astype(np.int64), rel)
                sizes = foreign * workload.item_bytes
                xfer = np.where(foreign > 0, link.latency + sizes / link.bandwidth, 0.0)

            t = work + xfer
            r = np.maximum.reduceat(ready[lo:hi], rel)
            now0 = clock.now(name)
            s = np.cumsum(t)
            base = np.maximum(now0, np.maximum.accumulate(r - (s - t)))
            ends = s + base

            clock.charge(name, STALL, float(base[-1] - now0))
            clock.charge(name, step.value, float(work.sum()))
            if xfer.any():
                clock.charge(name, TRANSFER, float(xfer.sum()))

            lengths = np.diff(np.append(starts, hi))
            ready[lo:hi] = np.repeat(ends, lengths)
            owner[lo:hi] = side
            items[side] += hi - lo

    if link is not None and workload.download_output:
        out = workload.out_total(splits[-1], x) * workload.output_bytes
        if out > 0:
            clock.charge(GPU, TRANSFER, transfer_time(link, out))

    return SeriesTiming(
        workload.phase,
        DeviceTiming.from_clock(clock, CPU, items[0]),
        DeviceTiming.from_clock(clock, GPU, items[1]),
        global_ops,
    )


def _chunk_costs(
    workload: SeriesWorkload,
    dev: DeviceProfile,
    starts: np.ndarray,
    opts: TimelineOptions,
    upload: bool,
) -> tuple[dict[str, np.ndarray], np.ndarray, np.ndarray]:
    """Per-chunk step times, transfer times and grant counts on one device"""
    per_step: dict[str, np.ndarray] = {}
    grants_total = np.zeros(starts.size, dtype=np.int64)
    for step in workload.steps:
        lanes = workload.lane_costs(step, dev)
        compute = lockstep.segment_lockstep(lanes, starts, dev.wavefront_width) / dev.slots
        grants = _grants(workload.alloc_bytes[step], starts, opts.block_size)
        grants_total += grants
        per_step[step.value] = compute + grants * dev.atomic_cost
    xfer = np.zeros(starts.size, dtype=np.float64)
    if upload and opts.link is not None:
        lengths = np.diff(np.append(starts, workload.x))
        link = opts.link
        if workload.upload_input:
            xfer += link.latency + lengths * workload.item_bytes / link.bandwidth
        if workload.download_output and workload.out_items is not None:
            out = np.add.reduceat(workload.out_items, starts) * workload.output_bytes
            xfer += np.where(out > 0, link.latency + out / link.bandwidth, 0.0)
    return per_step, xfer, grants_total


def simulate_basic_unit(
    workload: SeriesWorkload,
    cpu: DeviceProfile,
    gpu: DeviceProfile,
    chunk_size: int,
    opts: Optional[TimelineOptions] = None,
) -> tuple[SeriesTiming, np.ndarray]:
    """Dynamic chunk scheduling: the idle device pulls the next chunk.

    Each chunk runs all steps of the phase on one device. Ties go to the CPU.

    Returns:
        (timing, device side of every chunk)
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    opts = opts or TimelineOptions()
    x = workload.x
    clock = LogicalClock()
    clock.charge(CPU, STALL, 0.0)
    clock.charge(GPU, STALL, 0.0)
    starts = np.arange(0, x, chunk_size, dtype=np.int64)
    if starts.size == 0:
        empty = DeviceTiming.from_clock(clock, CPU, 0)
        return SeriesTiming(workload.phase, empty, DeviceTiming.from_clock(clock, GPU, 0)), starts
    lengths = np.diff(np.append(starts, x))
    costs = []
    for dev, upload in ((cpu, False), (gpu, opts.discrete)):
        costs.append(_chunk_costs(workload, dev, starts, opts, upload))
    owner = np.zeros(starts.size, dtype=np.int8)
    items = [0, 0]
    global_ops = 0
    names = (CPU, GPU)
    overhead = (cpu.dispatch_overhead, gpu.dispatch_overhead)
    for c in range(starts.size):
        side = 0 if clock.now(CPU) <= clock.now(GPU) else 1
        name = names[side]
        per_step, xfer, grants = costs[side]
        clock.charge(name, "dispatch", overhead[side])
        if xfer[c] > 0:
            clock.charge(name, TRANSFER, float(xfer[c]))
        for label, t in per_step.items():
            clock.charge(name, label, float(t[c]))
        owner[c] = side
        items[side] += int(lengths[c]) * len(workload.steps)
        global_ops += int(grants[c])
    timing = SeriesTiming(
        workload.phase,
        DeviceTiming.from_clock(clock, CPU, items[0]),
        DeviceTiming.from_clock(clock, GPU, items[1]),
        global_ops,
    )
    return timing, owner
