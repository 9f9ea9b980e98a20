"""Fine-grained step kernels of the hash joins.

A join is a sequence of step series (partition passes, build, probe)
separated by barriers. Each step is a data-parallel kernel over items;
the item index space of a series is fixed, so steps can be split between
devices at any boundary and the outputs still compose.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from cojoin.data.relation import Relation
from cojoin.memory.allocator import DEFAULT_BLOCK_SIZE, Arena, BlockGrant, GroupAllocator
from cojoin.memory.hashtable import (
    KEY_NODE_BYTES,
    NONE,
    RID_NODE_BYTES,
    HashTable,
    bucket_index,
    murmur2_array,
    next_pow2,
)

from . import lockstep

if TYPE_CHECKING:
    from cojoin.config.schema import EngineConfig, Scheme

ITEM_BYTES = 8  # (key, rid)
PAIR_BYTES = 8  # (r_rid, s_rid)

# Device sides used to index per-device structures
CPU_SIDE = 0
GPU_SIDE = 1


class StepId(str, Enum):
    """Step kernels"""

    B1 = "b1"  # Compute hash bucket number
    B2 = "b2"  # Visit the hash bucket header
    B3 = "b3"  # Visit the key list, create a key node if necessary
    B4 = "b4"  # Insert the record id into the rid list
    P1 = "p1"  # Compute hash bucket number
    P2 = "p2"  # Visit the hash bucket header
    P3 = "p3"  # Visit the key list
    P4 = "p4"  # Compare keys and emit matching pairs
    N1 = "n1"  # Compute partition number
    N2 = "n2"  # Visit the partition header
    N3 = "n3"  # Insert the <key, rid> into the partition
    PAIR = "pair"  # Whole SHJ on one partition pair

    @property
    def label(self) -> str:
        return self.value.upper()


BUILD_STEPS: tuple[StepId, ...] = (StepId.B1, StepId.B2, StepId.B3, StepId.B4)
PROBE_STEPS: tuple[StepId, ...] = (StepId.P1, StepId.P2, StepId.P3, StepId.P4)
PARTITION_STEPS: tuple[StepId, ...] = (StepId.N1, StepId.N2, StepId.N3)
FINE_STEPS: tuple[StepId, ...] = BUILD_STEPS + PROBE_STEPS + PARTITION_STEPS


def block_or_basic(block_size: int) -> Optional[int]:
    """Map the configured block size to the allocator argument (0 = basic)"""
    return None if block_size == 0 else block_size


@dataclass
class StepSeries:
    """Ordered steps over one item index space, ended by a barrier"""

    phase: str
    steps: tuple[StepId, ...]
    x: list[int]
    barrier_after: bool = True

    def __post_init__(self) -> None:
        if len(self.x) != len(self.steps):
            raise ValueError(
                f"series '{self.phase}' has {len(self.steps)} steps but {len(self.x)} item counts"
            )

    @property
    def n(self) -> int:
        return len(self.steps)

    @classmethod
    def uniform(cls, phase: str, steps: Sequence[StepId], items: int) -> StepSeries:
        """Series whose steps all see the same items (every fine step maps 1:1)"""
        return cls(phase, tuple(steps), [items] * len(steps))


class WorkGroup:
    """Allocators of one work group, one per arena it touches"""

    def __init__(self, block_size: Optional[int] = DEFAULT_BLOCK_SIZE) -> None:
        self.block_size = block_size
        self._allocs: dict[int, GroupAllocator] = {}

    def allocator(self, arena: Arena) -> GroupAllocator:
        alloc = self._allocs.get(id(arena))
        if alloc is None:
            alloc = GroupAllocator(arena, self.block_size)
            self._allocs[id(arena)] = alloc
        return alloc

    @property
    def global_ops(self) -> int:
        return sum(a.global_ops for a in self._allocs.values())


class JoinResult:
    """Matching (r_rid, s_rid) pairs written into an output arena"""

    def __init__(self, arena: Arena) -> None:
        self.arena = arena
        self._spans: list[tuple[int, int]] = []
        self._count = 0
        self._lock = threading.Lock()

    def emit(self, alloc: GroupAllocator, r_rids: Sequence[int], s_rid: int) -> None:
        """Write one pair per build rid for a single probe tuple"""
        m = len(r_rids)
        if m == 0:
            return
        offset = alloc.alloc(PAIR_BYTES * m)
        w = offset >> 2
        words = self.arena.words
        words[w : w + 2 * m : 2] = r_rids
        words[w + 1 : w + 2 * m : 2] = s_rid
        with self._lock:
            self._spans.append((offset, m))
            self._count += m

    def __len__(self) -> int:
        return self._count

    def pairs(self) -> np.ndarray:
        """All pairs as an (n, 2) uint32 array in emission order"""
        if not self._spans:
            return np.empty((0, 2), dtype=np.uint32)
        words = self.arena.words
        chunks = [words[(off >> 2) : (off >> 2) + 2 * m] for off, m in self._spans]
        return np.concatenate(chunks).reshape(-1, 2).copy()

    def multiset(self) -> np.ndarray:
        return pair_multiset(self.pairs())


def pair_multiset(pairs: np.ndarray) -> np.ndarray:
    """Canonical sorted form of a pair multiset for equality checks"""
    arr = np.asarray(pairs, dtype=np.uint64).reshape(-1, 2)
    return np.sort((arr[:, 0] << np.uint64(32)) | arr[:, 1])


class PartitionBuffers:
    """Per-partition chains of arena blocks filled by N3.

    Each of the ``parents`` partitions of the previous pass owns ``fanout``
    adjacent chains, so the sub-partitions of a partition stay contiguous.
    """

    def __init__(
        self,
        arena: Arena,
        fanout: int,
        block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
        latch_stripes: int = 1024,
        parents: int = 1,
    ) -> None:
        self.arena = arena
        self.fanout = fanout
        self.parents = parents
        total = parents * fanout
        self.block_size = block_size or ITEM_BYTES
        self.counts = np.zeros(total, dtype=np.int64)
        self._chains: list[list[BlockGrant]] = [[] for _ in range(total)]
        stripes = next_pow2(min(latch_stripes, total))
        self._latches = [threading.Lock() for _ in range(stripes)]
        self._mask = stripes - 1

    def append(self, part: int, key: int, rid: int) -> None:
        with self._latches[part & self._mask]:
            chain = self._chains[part]
            if not chain or chain[-1].remaining < ITEM_BYTES:
                chain.append(self.arena.grant_block(self.block_size))
            offset = chain[-1].local_alloc(ITEM_BYTES)
            w = offset >> 2
            self.arena.words[w] = key
            self.arena.words[w + 1] = rid
            self.counts[part] += 1

    def relations(self) -> list[Relation]:
        words = self.arena.words
        out: list[Relation] = []
        for chain in self._chains:
            if not chain:
                out.append(Relation.empty())
                continue
            flat = np.concatenate(
                [words[g.offset >> 2 : (g.offset + g.local_cursor) >> 2] for g in chain]
            ).reshape(-1, 2)
            out.append(Relation(rids=flat[:, 1], keys=flat[:, 0]))
        return out


@dataclass
class PartitionSet:
    """Radix partitions of one relation"""

    parts: list[Relation]
    pass_bits: int
    passes: int

    @property
    def P(self) -> int:
        return len(self.parts)

    def sizes(self) -> np.ndarray:
        return np.array([len(p) for p in self.parts], dtype=np.int64)

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes())]).astype(np.int64)

    def concat(self) -> Relation:
        """All tuples in partition order"""
        if not self.parts:
            return Relation.empty()
        return Relation(
            rids=np.concatenate([p.rids for p in self.parts]),
            keys=np.concatenate([p.keys for p in self.parts]),
        )

    def membership(self) -> dict[int, int]:
        """rid -> partition index"""
        out: dict[int, int] = {}
        for index, part in enumerate(self.parts):
            for rid in part.rids.tolist():
                out[rid] = index
        return out


@dataclass
class StepContext:
    """Structures a step series reads and writes, indexed by item"""

    keys: np.ndarray
    rids: np.ndarray
    seed: int = 0
    tables: tuple[HashTable, ...] = ()
    result: Optional[JoinResult] = None
    partitions: Optional[PartitionBuffers] = None
    partition_mask: int = 0
    partition_shift: int = 0
    parents: Optional[np.ndarray] = None
    hashes: np.ndarray = field(init=False)
    buckets: np.ndarray = field(init=False)
    lengths: np.ndarray = field(init=False)
    nodes: np.ndarray = field(init=False)
    node_side: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        n = int(self.keys.shape[0])
        self.hashes = np.zeros(n, dtype=np.uint32)
        self.buckets = np.zeros(n, dtype=np.int64)
        self.lengths = np.zeros(n, dtype=np.int64)
        self.nodes = np.full(n, NONE, dtype=np.uint32)
        self.node_side = np.zeros(n, dtype=np.int8)

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    @classmethod
    def for_build(cls, rel: Relation, cpu_table: HashTable, gpu_table: Optional[HashTable] = None) -> StepContext:
        """Build context; a second table selects separate-table mode"""
        tables = (cpu_table, gpu_table or cpu_table)
        return cls(rel.keys, rel.rids, seed=cpu_table.seed, tables=tables)

    @classmethod
    def for_probe(cls, rel: Relation, table: HashTable, result: JoinResult) -> StepContext:
        return cls(rel.keys, rel.rids, seed=table.seed, tables=(table, table), result=result)

    @classmethod
    def for_partition(
        cls,
        rel: Relation,
        buffers: PartitionBuffers,
        bits: int,
        seed: int = 0,
        shift: int = 0,
        parents: Optional[np.ndarray] = None,
    ) -> StepContext:
        """Context of one pass taking ``bits`` hash bits above ``shift``.

        ``parents`` holds the previous-pass partition of every tuple.
        """
        return cls(
            rel.keys,
            rel.rids,
            seed=seed,
            partitions=buffers,
            partition_mask=(1 << bits) - 1,
            partition_shift=shift,
            parents=parents,
        )


@dataclass
class StepRun:
    """Outcome of one step over a set of items"""

    step: StepId
    items: int
    units: np.ndarray
    cost: float = 0.0


def run_step(
    step: StepId,
    items: np.ndarray,
    ctx: StepContext,
    side: int = CPU_SIDE,
    group: Optional[WorkGroup] = None,
    device: object = None,
) -> StepRun:
    """Run one step kernel over the given item indices.

    Args:
        step: Kernel to run
        items: Item indices into the context arrays
        ctx: Series context
        side: Device side executing the items
        group: Work group whose allocators serve the step's requests
        device: Optional profile; when given the step's logical cost is returned

    Returns:
        Step outcome with per-item work units

    Raises:
        ArenaExhausted: When a node or pair allocation does not fit
    """
    idx = np.asarray(items, dtype=np.int64)
    group = group or WorkGroup()
    units = np.ones(idx.shape[0], dtype=np.float64)

    if step in (StepId.B1, StepId.P1):
        table = ctx.tables[0]
        h = murmur2_array(ctx.keys[idx], ctx.seed)
        ctx.hashes[idx] = h
        ctx.buckets[idx] = bucket_index(h, table.num_buckets, table.partition_bits, table.hash_shift)
    elif step is StepId.N1:
        h = murmur2_array(ctx.keys[idx], ctx.seed)
        ctx.hashes[idx] = h
        digit = ((h >> np.uint32(ctx.partition_shift)) & np.uint32(ctx.partition_mask)).astype(np.int64)
        if ctx.parents is not None:
            digit += ctx.parents[idx] * (ctx.partition_mask + 1)
        ctx.buckets[idx] = digit
    elif step is StepId.B2:
        ctx.lengths[idx] = ctx.tables[side].key_counts[ctx.buckets[idx]]
    elif step is StepId.P2:
        ctx.lengths[idx] = ctx.tables[0].key_counts[ctx.buckets[idx]]
    elif step is StepId.N2:
        assert ctx.partitions is not None
        ctx.lengths[idx] = ctx.partitions.counts[ctx.buckets[idx]]
    elif step is StepId.B3:
        table = ctx.tables[side]
        alloc = group.allocator(table.arena)
        for j, i in enumerate(idx.tolist()):
            node, visited = table.find_or_create(int(ctx.buckets[i]), int(ctx.keys[i]), alloc)
            ctx.nodes[i] = node
            ctx.node_side[i] = side
            units[j] = visited
    elif step is StepId.B4:
        for i in idx.tolist():
            table = ctx.tables[int(ctx.node_side[i])]
            table.append_rid(
                int(ctx.buckets[i]), int(ctx.nodes[i]), int(ctx.rids[i]), group.allocator(table.arena)
            )
    elif step is StepId.P3:
        table = ctx.tables[0]
        for j, i in enumerate(idx.tolist()):
            node, visited = table.find(int(ctx.buckets[i]), int(ctx.keys[i]))
            ctx.nodes[i] = node
            units[j] = max(1, visited)
    elif step is StepId.P4:
        assert ctx.result is not None
        table = ctx.tables[0]
        alloc = group.allocator(ctx.result.arena)
        for j, i in enumerate(idx.tolist()):
            node = int(ctx.nodes[i])
            if node == NONE:
                continue
            r_rids = table.rids_of(node)
            ctx.result.emit(alloc, r_rids, int(ctx.rids[i]))
            units[j] = max(1, len(r_rids))
    elif step is StepId.N3:
        assert ctx.partitions is not None
        buffers = ctx.partitions
        for i in idx.tolist():
            buffers.append(int(ctx.buckets[i]), int(ctx.keys[i]), int(ctx.rids[i]))
    else:
        raise ValueError(f"step {step.label} has no item kernel")

    cost = device.step_time(step, units) if device is not None else 0.0  # type: ignore[attr-defined]
    return StepRun(step, int(idx.shape[0]), units, cost)


def run_series(
    steps: Sequence[StepId],
    ctx: StepContext,
    side: int = CPU_SIDE,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> list[StepRun]:
    """Run a whole series on one side, one work group per step"""
    items = np.arange(len(ctx), dtype=np.int64)
    return [run_step(step, items, ctx, side, WorkGroup(block_size)) for step in steps]


def match_counts(build_keys: np.ndarray, probe_keys: np.ndarray) -> np.ndarray:
    """Number of build tuples matching each probe key"""
    uniq, counts = np.unique(np.asarray(build_keys), return_counts=True)
    probe = np.asarray(probe_keys)
    if uniq.size == 0:
        return np.zeros(probe.shape[0], dtype=np.int64)
    pos = np.searchsorted(uniq, probe)
    clipped = np.minimum(pos, uniq.size - 1)
    hit = (pos < uniq.size) & (uniq[clipped] == probe)
    return np.where(hit, counts[clipped], 0).astype(np.int64)


def table_arena_capacity(
    tuples: int, distinct_keys: int, groups: int, block_size: Optional[int]
) -> int:
    """Arena bytes for a table's nodes plus one partly used block per work group"""
    payload = KEY_NODE_BYTES * distinct_keys + RID_NODE_BYTES * tuples
    block = block_size or KEY_NODE_BYTES
    return payload + payload // 8 + (groups + 8) * block + (1 << 16)


def output_arena_capacity(
    matches: int, max_multiplicity: int, groups: int, block_size: Optional[int]
) -> int:
    payload = PAIR_BYTES * matches
    block = max(block_size or PAIR_BYTES, PAIR_BYTES * max_multiplicity)
    return payload + payload // 8 + (groups + 8) * block + (1 << 16)


def new_table(
    keys: np.ndarray,
    seed: int = 0,
    bucket_factor: float = 1.0,
    partition_bits: int = 0,
    groups: int = 1,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
    arena_bytes: Optional[int] = None,
    latch_stripes: int = 4096,
    hash_shift: int = 0,
) -> HashTable:
    """Hash table sized for the given build keys.

    A table over one radix partition passes the partitioning bits as
    ``hash_shift``; they are equal for all of its keys.
    """
    n = int(np.asarray(keys).shape[0])
    per_partition = math.ceil(bucket_factor * n / (1 << partition_bits)) if n else 1
    distinct = int(np.unique(keys).size) if n else 0
    capacity = arena_bytes or table_arena_capacity(n, distinct, groups, block_size)
    return HashTable(
        Arena(capacity),
        next_pow2(per_partition),
        seed=seed,
        partition_bits=partition_bits,
        latch_stripes=latch_stripes,
        block_size=block_size,
        hash_shift=hash_shift,
    )


def new_result(
    build_keys: np.ndarray,
    probe_keys: np.ndarray,
    groups: int = 1,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> JoinResult:
    """Result arena sized from the exact match count"""
    counts = match_counts(build_keys, probe_keys)
    max_m = int(counts.max()) if counts.size else 0
    return JoinResult(Arena(output_arena_capacity(int(counts.sum()), max_m, groups, block_size)))


def shj_join(
    R: Relation,
    S: Relation,
    seed: int = 0,
    bucket_factor: float = 1.0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> JoinResult:
    """Simple hash join run serially through the fine-grained steps"""
    table = new_table(R.keys, seed=seed, bucket_factor=bucket_factor, groups=4, block_size=block_size)
    result = new_result(R.keys, S.keys, block_size=block_size)
    join_into(R, S, table, result, block_size)
    return result


def join_into(
    R: Relation,
    S: Relation,
    table: HashTable,
    result: JoinResult,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> None:
    """Build table from R, then probe it with S emitting into result"""
    run_series(BUILD_STEPS, StepContext.for_build(R, table), block_size=block_size)
    run_series(PROBE_STEPS, StepContext.for_probe(S, table, result), block_size=block_size)


def partition_arena_capacity(tuples: int, fanout: int, block_size: Optional[int]) -> int:
    return ITEM_BYTES * tuples + fanout * (block_size or ITEM_BYTES) + (1 << 12)


def pass_shift(pass_index: int, pass_bits: int, passes: int) -> int:
    """Lowest hash bit a pass reads; the first pass takes the highest digit"""
    return pass_bits * (passes - pass_index - 1)


def parent_ids(sizes: Sequence[int]) -> np.ndarray:
    """Partition of every tuple of partitions laid out back to back"""
    return np.repeat(np.arange(len(sizes), dtype=np.int64), np.asarray(sizes, dtype=np.int64))


def partition_pass(
    parts: Sequence[Relation],
    pass_bits: int,
    shift: int,
    seed: int = 0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> list[Relation]:
    """One radix pass: split every partition by the pass_bits hash bits above shift.

    Returns the 2^pass_bits sub-partitions of each input partition, in
    input partition order.
    """
    fanout = 1 << pass_bits
    rel = PartitionSet(list(parts), pass_bits, 0).concat()
    buffers = PartitionBuffers(
        Arena(partition_arena_capacity(len(rel), fanout * len(parts), block_size)),
        fanout,
        block_size,
        parents=len(parts),
    )
    ctx = StepContext.for_partition(
        rel, buffers, pass_bits, seed, shift=shift, parents=parent_ids([len(p) for p in parts])
    )
    run_series(PARTITION_STEPS, ctx, block_size=block_size)
    return buffers.relations()


def radix_partition(
    rel: Relation,
    pass_bits: int,
    passes: int,
    seed: int = 0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> PartitionSet:
    """Partition rel by the low pass_bits * passes bits of murmur2(key).

    Each pass splits every partition of the previous pass into 2^pass_bits
    sub-partitions, taking the hash digits from the most significant one
    down. Partition j ends up holding the keys whose low bits equal j.

    Raises:
        ValueError: pass_bits * passes exceeds 32
    """
    if pass_bits < 0 or passes < 0:
        raise ValueError("pass_bits and passes must be >= 0")
    if pass_bits * passes > 32:
        raise ValueError(f"pass_bits * passes must be <= 32, got {pass_bits * passes}")
    if pass_bits == 0 or passes == 0:
        return PartitionSet([rel], pass_bits, passes)
    parts: list[Relation] = [rel]
    for p in range(passes):
        parts = partition_pass(parts, pass_bits, pass_shift(p, pass_bits, passes), seed, block_size)
    return PartitionSet(parts, pass_bits, passes)


def partition_ids(keys: np.ndarray, bits: int, seed: int = 0, shift: int = 0) -> np.ndarray:
    """Partition index of every key by direct bit extraction above ``shift``"""
    h = murmur2_array(keys, seed) >> np.uint32(shift)
    return (h & np.uint32((1 << bits) - 1)).astype(np.int64)


def phj_join(
    R: Relation,
    S: Relation,
    pass_bits: int,
    passes: int,
    scheme: Optional[Scheme] = None,
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    bucket_factor: float = 1.0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> JoinResult:
    """Radix-partitioned hash join.

    Without a scheme the steps run serially on one side; with a scheme the
    join is planned and executed on both devices.
    """
    if scheme is not None:
        from cojoin.config.schema import Algorithm, EngineConfig
        from cojoin.engine.scheduler import run_join

        cfg = (config or EngineConfig()).model_copy(deep=True)
        cfg.partition.pass_bits = pass_bits
        cfg.partition.passes = passes
        report = run_join(Algorithm.PHJ, scheme, R, S, cfg)
        assert report.result is not None
        return report.result

    r_parts = radix_partition(R, pass_bits, passes, seed, block_size)
    s_parts = radix_partition(S, pass_bits, passes, seed, block_size)
    bits = pass_bits * passes if pass_bits and passes else 0
    table = new_table(
        R.keys, seed=seed, bucket_factor=bucket_factor, partition_bits=bits, groups=4, block_size=block_size
    )
    result = new_result(R.keys, S.keys, block_size=block_size)
    join_into(r_parts.concat(), s_parts.concat(), table, result, block_size)
    return result


def partition_pairs(
    R: Relation, S: Relation, pass_bits: int, passes: int, seed: int = 0
) -> list[tuple[Relation, Relation]]:
    """Matching (R_i, S_i) partition pairs"""
    r_parts = radix_partition(R, pass_bits, passes, seed)
    s_parts = radix_partition(S, pass_bits, passes, seed)
    return list(zip(r_parts.parts, s_parts.parts))


def join_pair(
    r_part: Relation,
    s_part: Relation,
    result: JoinResult,
    seed: int = 0,
    bucket_factor: float = 1.0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
    hash_shift: int = 0,
) -> None:
    """SHJ on one partition pair with its own private table.

    ``hash_shift`` is the number of low hash bits the partitioning used.
    """
    if len(r_part) == 0 or len(s_part) == 0:
        return
    table = new_table(
        r_part.keys, seed=seed, bucket_factor=bucket_factor, groups=2, block_size=block_size, hash_shift=hash_shift
    )
    join_into(r_part, s_part, table, result, block_size)


def coarse_step_join(
    R: Relation,
    S: Relation,
    pass_bits: int,
    passes: int,
    seed: int = 0,
    bucket_factor: float = 1.0,
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
) -> JoinResult:
    """PHJ whose schedulable unit is the SHJ of a whole partition pair"""
    pairs = partition_pairs(R, S, pass_bits, passes, seed)
    result = new_result(R.keys, S.keys, groups=2 * len(pairs), block_size=block_size)
    bits = pass_bits * passes if pass_bits and passes else 0
    for r_part, s_part in pairs:
        join_pair(r_part, s_part, result, seed, bucket_factor, block_size, hash_shift=bits)
    return result


def group_by_workload(items: np.ndarray, measure: np.ndarray, g_groups: int) -> np.ndarray:
    """Reorder items so that items of similar workload are adjacent.

    Items are ranked by measure and cut into g_groups equal-count groups;
    the original order is kept inside each group.

    Args:
        items: Items to reorder
        measure: Workload of each item (aligned with items)
        g_groups: Number of groups

    Returns:
        Permuted items
    """
    if g_groups < 1:
        raise ValueError(f"g_groups must be >= 1, got {g_groups}")
    arr = np.asarray(items)
    m = np.asarray(measure, dtype=np.float64)
    if m.shape[0] != arr.shape[0]:
        raise ValueError("items and measure must have the same length")
    n = arr.shape[0]
    if g_groups == 1 or n == 0:
        return arr.copy()
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(m, kind="stable")] = np.arange(n, dtype=np.int64)
    gid = ranks * g_groups // n
    return arr[np.argsort(gid, kind="stable")]


def wavefront_divergence(costs: np.ndarray, width: int) -> float:
    """Sum over wavefronts of (max - mean) item cost"""
    return lockstep.divergence(costs, width)


def reference_join(R: Relation, S: Relation) -> np.ndarray:
    """Sort-based join used as an oracle; returns (n, 2) pairs"""
    order = np.argsort(R.keys, kind="stable")
    sorted_keys = R.keys[order]
    lo = np.searchsorted(sorted_keys, S.keys, side="left")
    hi = np.searchsorted(sorted_keys, S.keys, side="right")
    cnt = (hi - lo).astype(np.int64)
    total = int(cnt.sum())
    if total == 0:
        return np.empty((0, 2), dtype=np.uint32)
    starts = np.repeat(np.cumsum(cnt) - cnt, cnt)
    r_pos = np.repeat(lo, cnt) + (np.arange(total, dtype=np.int64) - starts)
    s_idx = np.repeat(np.arange(len(S), dtype=np.int64), cnt)
    return np.stack([R.rids[order][r_pos], S.rids[s_idx]], axis=1).astype(np.uint32)
