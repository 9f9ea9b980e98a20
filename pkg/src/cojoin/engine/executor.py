"""Threaded execution of join plans.

One thread plays each device. In a pipelined series a thread runs its own
items of a step first, then the items the other thread hands over through
a bounded inbox. Items produced for the other device's range of the next
step are forwarded chunk by chunk.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from queue import Empty, Full, Queue
from typing import TYPE_CHECKING, Callable, Optional, Sequence

import numpy as np

from cojoin.config.schema import Algorithm, EngineConfig, Scheme, TableMode
from cojoin.data.relation import Relation
from cojoin.errors import HandoffDeadlock
from cojoin.memory.allocator import Arena

from .steps import (
    BUILD_STEPS,
    CPU_SIDE,
    GPU_SIDE,
    PARTITION_STEPS,
    PROBE_STEPS,
    JoinResult,
    PartitionBuffers,
    PartitionSet,
    StepContext,
    StepId,
    WorkGroup,
    block_or_basic,
    group_by_workload,
    join_pair,
    new_result,
    new_table,
    partition_arena_capacity,
    parent_ids,
    partition_ids,
    pass_shift,
    run_step,
)
from .timeline import splits_of
from .workload import (
    BUILD_PHASE,
    JOIN_PHASE,
    PROBE_PHASE,
    JoinWorkload,
    TableLayout,
    partition_bits_of,
    partition_phase,
    probe_measure,
)

if TYPE_CHECKING:
    from .scheduler import Plan

HANDOFF_POLL = 0.05
HANDOFF_TIMEOUT = 60.0


class _Aborted(Exception):
    """The other device thread failed"""


class Handoff:
    """Bounded inboxes between the two device threads.

    Each inbox has one producer, so batches of a step arrive in order.
    Batches that arrive early for a later step wait in a per-side stash.
    """

    def __init__(
        self,
        phase: str,
        steps: Sequence[StepId],
        capacity: int,
        timeout: float = HANDOFF_TIMEOUT,
    ) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.phase = phase
        self.steps = tuple(steps)
        self.capacity = capacity
        self.timeout = timeout
        self.inbox: tuple[Queue[tuple[int, np.ndarray]], ...] = (
            Queue(maxsize=capacity),
            Queue(maxsize=capacity),
        )
        self._stash: tuple[dict[int, list[np.ndarray]], ...] = ({}, {})
        self.abort = threading.Event()
        self._sent = [0, 0]

    @property
    def sent(self) -> int:
        """Items handed over in both directions"""
        return sum(self._sent)

    def _deadlock(self, step: int) -> HandoffDeadlock:
        self.abort.set()
        return HandoffDeadlock(self.phase, self.steps[step].label, self.capacity)

    def _drain(self, side: int) -> None:
        while True:
            try:
                step, items = self.inbox[side].get_nowait()
            except Empty:
                return
            self._stash[side].setdefault(step, []).append(items)

    def send(self, side: int, step: int, items: np.ndarray) -> None:
        """Hand items for the given step to the other side.

        Raises:
            HandoffDeadlock: The other side's inbox stayed full until timeout
        """
        target = 1 - side
        deadline = time.monotonic() + self.timeout
        while True:
            if self.abort.is_set():
                raise _Aborted()
            try:
                self.inbox[target].put((step, items), timeout=HANDOFF_POLL)
                self._sent[side] += int(items.size)
                return
            except Full:
                # Keep our own inbox moving so the other side can make progress
                self._drain(side)
                if time.monotonic() > deadline:
                    raise self._deadlock(step) from None

    def receive(self, side: int, step: int) -> np.ndarray:
        """Next batch of handed-off items for the given step"""
        stash = self._stash[side]
        deadline = time.monotonic() + self.timeout
        while True:
            batches = stash.get(step)
            if batches:
                return batches.pop(0)
            if self.abort.is_set():
                raise _Aborted()
            try:
                got, items = self.inbox[side].get(timeout=HANDOFF_POLL)
            except Empty:
                if time.monotonic() > deadline:
                    raise self._deadlock(step) from None
                continue
            stash.setdefault(got, []).append(items)


def _two_threads(work: Callable[[int], None], abort: Optional[threading.Event] = None) -> None:
    """Run work(CPU_SIDE) and work(GPU_SIDE) concurrently; re-raise the first real failure"""
    abort = abort or threading.Event()

    def guarded(side: int) -> None:
        try:
            work(side)
        except BaseException:
            abort.set()
            raise

    with ThreadPoolExecutor(max_workers=2, thread_name_prefix="cojoin-device") as pool:
        futures = [pool.submit(guarded, side) for side in (CPU_SIDE, GPU_SIDE)]
    errors = [f.exception() for f in futures]
    real = [e for e in errors if e is not None and not isinstance(e, _Aborted)]
    if real:
        raise real[0]
    aborted = [e for e in errors if e is not None]
    if aborted:
        raise aborted[0]


def _range(splits: Sequence[int], x: int, step: int, side: int) -> tuple[int, int]:
    a = splits[step]
    return (0, a) if side == CPU_SIDE else (a, x)


def run_pipelined(
    phase: str,
    steps: Sequence[StepId],
    ctx: StepContext,
    ratios: Sequence[float],
    chunk: int = 1024,
    block_size: Optional[int] = None,
    capacity: int = 1024,
    timeout: float = HANDOFF_TIMEOUT,
) -> int:
    """Run one step series on both device threads.

    At step i the CPU owns items [0, a_i) and the GPU [a_i, x).

    Returns:
        Number of items handed between the threads
    """
    x = len(ctx)
    n = len(steps)
    splits = splits_of(ratios, x)
    handoff = Handoff(phase, steps, capacity, timeout)

    def process(side: int, i: int, step: StepId, items: np.ndarray, nxt: tuple[int, int]) -> None:
        run_step(step, items, ctx, side, WorkGroup(block_size))
        if nxt[1] > nxt[0]:
            out = items[(items >= nxt[0]) & (items < nxt[1])]
            if out.size:
                handoff.send(side, i + 1, out)

    def device(side: int) -> None:
        for i, step in enumerate(steps):
            lo, hi = _range(splits, x, i, side)
            if i == 0:
                own_lo, own_hi = lo, hi
            else:
                plo, phi = _range(splits, x, i - 1, side)
                own_lo, own_hi = max(lo, plo), min(hi, phi)
            own = max(0, own_hi - own_lo)
            expected = (hi - lo) - own
            nxt = _range(splits, x, i + 1, 1 - side) if i + 1 < n else (0, 0)
            for start in range(own_lo, own_hi, chunk):
                items = np.arange(start, min(start + chunk, own_hi), dtype=np.int64)
                process(side, i, step, items, nxt)
            received = 0
            while received < expected:
                items = handoff.receive(side, i)
                process(side, i, step, items, nxt)
                received += int(items.size)

    _two_threads(device, handoff.abort)
    return handoff.sent


def run_dynamic(
    steps: Sequence[StepId],
    ctx: StepContext,
    chunk_size: int,
    block_size: Optional[int] = None,
) -> list[int]:
    """Both threads pull chunks from a shared queue and run every step on each.

    Returns:
        Chunks taken per side
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    x = len(ctx)
    work: Queue[int] = Queue()
    for start in range(0, x, chunk_size):
        work.put(start)
    taken = [0, 0]

    def device(side: int) -> None:
        while True:
            try:
                start = work.get_nowait()
            except Empty:
                return
            items = np.arange(start, min(start + chunk_size, x), dtype=np.int64)
            for step in steps:
                run_step(step, items, ctx, side, WorkGroup(block_size))
            taken[side] += 1

    _two_threads(device)
    return taken


@dataclass
class SemanticOutcome:
    """What the threaded run produced"""

    result: JoinResult
    arena_ops: int = 0
    merged_key_nodes: int = 0
    handed_off: int = 0


def _split_parts(rel: Relation, bits: int, seed: int, shift: int = 0) -> list[Relation]:
    """Cut a relation laid out in partition order into its partitions"""
    P = 1 << bits
    ids = partition_ids(rel.keys, bits, seed, shift)
    bounds = np.concatenate([[0], np.cumsum(np.bincount(ids, minlength=P))])
    return [rel.take(np.arange(bounds[j], bounds[j + 1])) for j in range(P)]


def run_semantic(
    plan: Plan,
    workload: JoinWorkload,
    R: Relation,
    S: Relation,
    config: EngineConfig,
    timeout: float = HANDOFF_TIMEOUT,
) -> SemanticOutcome:
    """Compute the join result of a plan on the two device threads.

    Raises:
        ArenaExhausted: An arena was sized too small
        HandoffDeadlock: A handoff queue stayed full
    """
    seed = config.hashtable.seed
    bf = config.hashtable.bucket_factor
    stripes = config.hashtable.latch_stripes
    outer = config.hashtable.hash_shift
    block = block_or_basic(config.allocator.block_size)
    chunk = config.scheduler.dispatch_items
    capacity = config.scheduler.handoff_cap
    dynamic = plan.scheme is Scheme.BASIC_UNIT
    if dynamic:
        assert plan.chunk_size is not None
        chunk = min(chunk, plan.chunk_size)
    arenas: list[Arena] = []
    handed = 0

    def run_phase(name: str, steps: Sequence[StepId], ctx: StepContext) -> None:
        nonlocal handed
        if dynamic:
            assert plan.chunk_size is not None
            run_dynamic(steps, ctx, plan.chunk_size, block)
        else:
            handed += run_pipelined(name, steps, ctx, plan.ratios[name], chunk, block, capacity, timeout)

    pb, g = partition_bits_of(config) if plan.algorithm is Algorithm.PHJ else (0, 0)
    bits = pb * g
    rels = {"r": R, "s": S}
    for name in ("r", "s"):
        current = rels[name]
        sizes = [len(current)]
        for p in range(g):
            fanout = 1 << pb
            arena = Arena(partition_arena_capacity(len(current), fanout * len(sizes), block))
            arenas.append(arena)
            buffers = PartitionBuffers(arena, fanout, block, stripes, parents=len(sizes))
            ctx = StepContext.for_partition(
                current, buffers, pb, seed, shift=outer + pass_shift(p, pb, g), parents=parent_ids(sizes)
            )
            run_phase(partition_phase(name, p), PARTITION_STEPS, ctx)
            parts = buffers.relations()
            sizes = [len(part) for part in parts]
            current = PartitionSet(parts, pb, p + 1).concat()
        rels[name] = current
    r_rel, s_rel = rels["r"], rels["s"]

    if plan.scheme is Scheme.COARSE_PL:
        r_parts = _split_parts(r_rel, bits, seed, outer) if bits else [r_rel]
        s_parts = _split_parts(s_rel, bits, seed, outer) if bits else [s_rel]
        P = len(r_parts)
        result = new_result(R.keys, S.keys, groups=2 * P + 8, block_size=block)
        a = splits_of(plan.ratios[JOIN_PHASE], P)[0]

        def pairs(side: int) -> None:
            for j in range(0, a) if side == CPU_SIDE else range(a, P):
                join_pair(r_parts[j], s_parts[j], result, seed, bf, block, hash_shift=outer + bits)

        _two_threads(pairs)
        return SemanticOutcome(result, result.arena.global_ops + sum(ar.global_ops for ar in arenas))

    groups = 4 * (max(len(R), len(S)) // max(1, chunk) + 4)
    arena_bytes = config.allocator.arena_bytes
    cpu_table = new_table(r_rel.keys, seed, bf, bits, groups, block, arena_bytes, stripes, outer)
    gpu_table = None
    if plan.table_mode is TableMode.SEPARATE:
        gpu_table = new_table(r_rel.keys, seed, bf, bits, groups, block, arena_bytes, stripes, outer)
    run_phase(BUILD_PHASE, BUILD_STEPS, StepContext.for_build(r_rel, cpu_table, gpu_table))
    merged = 0
    if gpu_table is not None:
        merged = cpu_table.merge(gpu_table).key_nodes
        arenas.append(gpu_table.arena)
    arenas.append(cpu_table.arena)

    probe_rel = s_rel
    if config.scheduler.groups > 1:
        layout = TableLayout.for_keys(len(R), bf, bits, seed, outer)
        measure = probe_measure(r_rel.keys, s_rel.keys, layout)
        order = group_by_workload(np.arange(len(s_rel), dtype=np.int64), measure, config.scheduler.groups)
        probe_rel = s_rel.take(order)
    result = new_result(r_rel.keys, probe_rel.keys, groups, block)
    arenas.append(result.arena)
    run_phase(PROBE_PHASE, PROBE_STEPS, StepContext.for_probe(probe_rel, cpu_table, result))
    return SemanticOutcome(result, sum(ar.global_ops for ar in arenas), merged, handed)
