"""Joins of inputs larger than the zero copy buffer.

The buffer plays main memory and host memory plays external memory.
Inputs are partitioned in buffer-sized chunks, fragments are spilled to
host memory and linked per partition, then every partition pair is
joined in the buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cojoin.config.schema import Algorithm, EngineConfig, Scheme
from cojoin.data.relation import Relation
from cojoin.engine.device import DeviceProfile, canned_profiles
from cojoin.engine.scheduler import run_join, search_series, timeline_options
from cojoin.engine.steps import ITEM_BYTES, PAIR_BYTES, match_counts, partition_ids, radix_partition
from cojoin.engine.timeline import simulate_series
from cojoin.engine.workload import partition_phase, partition_workload
from cojoin.errors import BufferOverflowError
from cojoin.memory.hashtable import table_bytes
from cojoin.utils.debuglog import log_event


def pair_bytes(r_keys: np.ndarray, s_keys: np.ndarray) -> int:
    """Buffer bytes needed to join one pair: tuples, hash table and output"""
    distinct = int(np.unique(r_keys).size)
    matches = int(match_counts(r_keys, s_keys).sum())
    tuples = ITEM_BYTES * (r_keys.size + s_keys.size)
    return tuples + table_bytes(int(r_keys.size), distinct) + PAIR_BYTES * matches


def _pair_footprints(R: Relation, S: Relation, bits: int, seed: int) -> np.ndarray:
    r_ids = partition_ids(R.keys, bits, seed)
    s_ids = partition_ids(S.keys, bits, seed)
    out = np.zeros(1 << bits, dtype=np.int64)
    for p in np.union1d(np.unique(r_ids), np.unique(s_ids)):
        out[p] = pair_bytes(R.keys[r_ids == p], S.keys[s_ids == p])
    return out


def choose_partition_bits(R: Relation, S: Relation, buffer_limit: int, pass_bits: int, passes: int, seed: int = 0) -> int:
    """Smallest multiple of pass_bits whose largest pair fits the buffer.

    Raises:
        BufferOverflowError: No pair layout up to pass_bits * passes bits fits
    """
    if pass_bits < 1 or passes < 1:
        raise ValueError("out-of-buffer joins need pass_bits >= 1 and passes >= 1")
    largest = pair_bytes(R.keys, S.keys)
    for p in range(1, passes + 1):
        bits = pass_bits * p
        largest = int(_pair_footprints(R, S, bits, seed).max())
        if largest <= buffer_limit:
            return bits
    raise BufferOverflowError(largest, buffer_limit, passes)


@dataclass
class LargeJoinReport:
    """Copy, partition and join time of an out-of-buffer join (logical seconds)"""

    in_buffer: bool
    partition_bits: int = 0
    pairs: int = 1
    chunks: int = 0
    copy_time: float = 0.0
    partition_time: float = 0.0
    join_time: float = 0.0
    results: int = 0
    spilled_bytes: int = 0
    result_pairs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def total(self) -> float:
        return self.copy_time + self.partition_time + self.join_time


class _Spill:
    """Host-memory fragments of one relation, per partition"""

    def __init__(self, partitions: int) -> None:
        self.fragments: list[list[Relation]] = [[] for _ in range(partitions)]
        self.bytes = 0

    def add(self, part: int, rel: Relation) -> None:
        if len(rel):
            self.fragments[part].append(rel)
            self.bytes += rel.nbytes

    def link(self, part: int) -> Relation:
        frags = self.fragments[part]
        if not frags:
            return Relation.empty()
        return Relation(np.concatenate([f.rids for f in frags]), np.concatenate([f.keys for f in frags]))


def largejoin(
    R: Relation,
    S: Relation,
    algorithm: Algorithm = Algorithm.SHJ,
    scheme: Scheme = Scheme.PL,
    config: Optional[EngineConfig] = None,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    buffer_limit: Optional[int] = None,
    chunk_tuples: Optional[int] = None,
    semantic: bool = True,
) -> LargeJoinReport:
    """Join R and S within a bounded buffer.

    Args:
        R: Build relation
        S: Probe relation
        algorithm: Join algorithm used on each partition pair
        scheme: Co-processing scheme of the pair joins and partition passes
        config: Engine configuration (bench.buffer_limit, chunk_tuples, host_copy_bandwidth)
        cpu: CPU-like profile
        gpu: GPU-like profile
        buffer_limit: Buffer bytes (config default when omitted)
        chunk_tuples: Tuples partitioned per chunk (config default when omitted)
        semantic: Compute the result pairs, not only the timing

    Returns:
        Time split and result count

    Raises:
        BufferOverflowError: A partition pair exceeds the buffer after all passes
    """
    config = config or EngineConfig()
    if cpu is None or gpu is None:
        canned_cpu, canned_gpu = canned_profiles()
        cpu, gpu = cpu or canned_cpu, gpu or canned_gpu
    limit = buffer_limit or config.bench.buffer_limit
    chunk = chunk_tuples or config.bench.chunk_tuples
    if chunk < 1:
        raise ValueError(f"chunk_tuples must be >= 1, got {chunk}")

    if pair_bytes(R.keys, S.keys) <= limit:
        report = run_join(algorithm, scheme, R, S, config, cpu, gpu, semantic=semantic)
        out = LargeJoinReport(True, join_time=report.measured, results=report.result_count)
        if report.result is not None:
            out.result_pairs = report.result.pairs()
        log_event("largejoin", {"in_buffer": True, "join": out.join_time})
        return out

    pb, passes = config.partition.pass_bits, config.partition.passes
    seed = config.hashtable.seed
    bits = choose_partition_bits(R, S, limit, pb, passes, seed)
    used = bits // pb
    P = 1 << bits
    bandwidth = config.bench.host_copy_bandwidth
    opts = timeline_options(config)
    part_scheme = Scheme.DD if scheme in (Scheme.BASIC_UNIT, Scheme.COARSE_PL) else scheme
    out = LargeJoinReport(False, partition_bits=bits, pairs=P)

    spills = {"r": _Spill(P), "s": _Spill(P)}
    for name, rel in (("r", R), ("s", S)):
        for start in range(0, len(rel), chunk):
            piece = rel.take(np.arange(start, min(start + chunk, len(rel))))
            out.chunks += 1
            # Chunk copied into the buffer, fragments copied back out
            out.copy_time += 2 * piece.nbytes / bandwidth
            for p in range(used):
                w = partition_workload(len(piece), partition_phase(name, p))
                ratios = search_series(part_scheme, w, cpu, gpu, config).ratios
                out.partition_time += simulate_series(w, ratios, cpu, gpu, opts).time
            parts = radix_partition(piece, pb, used, seed, opts.block_size)
            for j, frag in enumerate(parts.parts):
                spills[name].add(j, frag)
    out.spilled_bytes = spills["r"].bytes + spills["s"].bytes

    # Every key of a pair shares its low bits; the pair joins hash above them
    pair_config = config.model_copy(deep=True)
    pair_config.hashtable.hash_shift = config.hashtable.hash_shift + bits
    collected = []
    for j in range(P):
        r_part, s_part = spills["r"].link(j), spills["s"].link(j)
        if len(r_part) == 0 or len(s_part) == 0:
            continue
        out.copy_time += (r_part.nbytes + s_part.nbytes) / bandwidth
        report = run_join(algorithm, scheme, r_part, s_part, pair_config, cpu, gpu, semantic=semantic)
        out.join_time += report.measured
        out.results += report.result_count
        if report.result is not None:
            collected.append(report.result.pairs())
    if semantic:
        out.result_pairs = np.concatenate(collected) if collected else np.empty((0, 2), dtype=np.uint32)
    log_event(
        "largejoin",
        {
            "in_buffer": False,
            "bits": bits,
            "chunks": out.chunks,
            "copy": out.copy_time,
            "partition": out.partition_time,
            "join": out.join_time,
        },
    )
    return out


def linear_fit(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    """Least-squares line through the points: (slope, intercept, r_squared)"""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(((y - (slope * x + intercept)) ** 2).sum())
    spread = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - residual / spread if spread else 1.0
    return float(slope), float(intercept), r2
