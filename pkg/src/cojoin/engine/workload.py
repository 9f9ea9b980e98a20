"""Static per-item workload of each step series.

Work units, allocation bytes and output counts are computed from the
data with numpy, independent of how threads interleave, so the logical
timing of a plan is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

from cojoin.config.schema import Algorithm, EngineConfig
from cojoin.data.relation import Relation
from cojoin.memory.hashtable import KEY_NODE_BYTES, RID_NODE_BYTES, bucket_index, murmur2_array, next_pow2

from . import lockstep
from .steps import (
    BUILD_STEPS,
    ITEM_BYTES,
    PAIR_BYTES,
    PARTITION_STEPS,
    PROBE_STEPS,
    StepId,
    StepSeries,
    group_by_workload,
    match_counts,
    partition_ids,
    pass_shift,
)

if TYPE_CHECKING:
    from .device import DeviceProfile

BUILD_PHASE = "build"
PROBE_PHASE = "probe"
JOIN_PHASE = "join"


def partition_phase(relation: str, pass_index: int) -> str:
    return f"partition_{relation}.{pass_index}"


@dataclass(frozen=True)
class TableLayout:
    """Bucket geometry of a hash table"""

    num_buckets: int
    partition_bits: int = 0
    seed: int = 0
    hash_shift: int = 0

    @classmethod
    def for_keys(
        cls, n: int, bucket_factor: float = 1.0, partition_bits: int = 0, seed: int = 0, hash_shift: int = 0
    ) -> TableLayout:
        per_partition = math.ceil(bucket_factor * n / (1 << partition_bits)) if n else 1
        return cls(next_pow2(per_partition), partition_bits, seed, hash_shift)

    @property
    def total_buckets(self) -> int:
        return self.num_buckets << self.partition_bits

    def buckets(self, keys: np.ndarray) -> np.ndarray:
        return bucket_index(murmur2_array(keys, self.seed), self.num_buckets, self.partition_bits, self.hash_shift)

    def key_counts(self, keys: np.ndarray) -> np.ndarray:
        """Distinct keys per bucket once all keys are inserted"""
        b = self.buckets(keys).astype(np.uint64)
        combined = (b << np.uint64(32)) | np.asarray(keys, dtype=np.uint64)
        uniq = np.unique(combined)
        return np.bincount((uniq >> np.uint64(32)).astype(np.int64), minlength=self.total_buckets)


@dataclass
class SeriesWorkload:
    """Per-item work of one step series"""

    phase: str
    steps: tuple[StepId, ...]
    units: dict[StepId, np.ndarray]
    alloc_bytes: dict[StepId, np.ndarray]
    out_items: Optional[np.ndarray] = None
    new_key_nodes: Optional[np.ndarray] = None
    lane_override: dict[tuple[StepId, str], np.ndarray] = field(default_factory=dict)
    item_bytes: int = ITEM_BYTES
    output_bytes: int = PAIR_BYTES
    upload_input: bool = True
    download_output: bool = False
    _effective: dict[tuple[StepId, str, int], float] = field(default_factory=dict, repr=False)

    @property
    def x(self) -> int:
        return int(self.units[self.steps[0]].shape[0])

    @property
    def series(self) -> StepSeries:
        return StepSeries.uniform(self.phase, self.steps, self.x)

    def lane_costs(self, step: StepId, device: DeviceProfile, lo: int = 0, hi: Optional[int] = None) -> np.ndarray:
        override = self.lane_override.get((step, device.kind.value))
        if override is not None:
            return override[lo:hi]
        return device.lane_costs(step, self.units[step][lo:hi])

    def mean_units(self, step: StepId) -> float:
        u = self.units[step]
        return float(u.mean()) if u.size else 0.0

    def effective_units(self, step: StepId, device: DeviceProfile) -> float:
        """Units per item a device pays on average, divergence included"""
        key = (step, device.kind.value, device.wavefront_width)
        if key not in self._effective:
            if device.wavefront_width > 1:
                value = lockstep.lockstep_units(self.units[step], device.wavefront_width)
            else:
                value = self.mean_units(step)
            self._effective[key] = value
        return self._effective[key]

    def override_cost(self, step: StepId, device: DeviceProfile) -> Optional[float]:
        """Device-wide time per item for steps with precomputed lane costs"""
        lanes = self.lane_override.get((step, device.kind.value))
        if lanes is None:
            return None
        if lanes.size == 0:
            return 0.0
        per_lane = lockstep.lockstep_units(lanes, device.wavefront_width)
        return per_lane / device.worker_count

    def out_total(self, lo: int = 0, hi: Optional[int] = None) -> int:
        if self.out_items is None:
            return 0
        return int(self.out_items[lo:hi].sum())

    def permute(self, order: np.ndarray) -> SeriesWorkload:
        """Workload with items reordered"""

        def take(a: Optional[np.ndarray]) -> Optional[np.ndarray]:
            return None if a is None else a[order]

        return replace(
            self,
            units={s: u[order] for s, u in self.units.items()},
            alloc_bytes={s: b[order] for s, b in self.alloc_bytes.items()},
            out_items=take(self.out_items),
            new_key_nodes=take(self.new_key_nodes),
            lane_override={k: v[order] for k, v in self.lane_override.items()},
            _effective={},
        )


def _ones(n: int) -> np.ndarray:
    return np.ones(n, dtype=np.float64)


def _zeros(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.int64)


def build_workload(keys: np.ndarray, layout: TableLayout, phase: str = BUILD_PHASE) -> SeriesWorkload:
    """B1..B4 workload; B3 visits every key of the item's bucket"""
    n = int(np.asarray(keys).shape[0])
    kcount = layout.key_counts(keys)
    b3 = np.maximum(1, kcount[layout.buckets(keys)]).astype(np.float64)
    new_nodes = np.zeros(n, dtype=bool)
    if n:
        _, first = np.unique(np.asarray(keys), return_index=True)
        new_nodes[first] = True
    units = {StepId.B1: _ones(n), StepId.B2: _ones(n), StepId.B3: b3, StepId.B4: _ones(n)}
    alloc = {
        StepId.B1: _zeros(n),
        StepId.B2: _zeros(n),
        StepId.B3: new_nodes.astype(np.int64) * KEY_NODE_BYTES,
        StepId.B4: np.full(n, RID_NODE_BYTES, dtype=np.int64),
    }
    return SeriesWorkload(phase, BUILD_STEPS, units, alloc, new_key_nodes=new_nodes)


def probe_measure(build_keys: np.ndarray, probe_keys: np.ndarray, layout: TableLayout) -> np.ndarray:
    """Key-list length at each probe item's bucket"""
    kcount = layout.key_counts(build_keys)
    return np.maximum(1, kcount[layout.buckets(probe_keys)]).astype(np.float64)


def probe_workload(
    build_keys: np.ndarray, probe_keys: np.ndarray, layout: TableLayout, phase: str = PROBE_PHASE
) -> SeriesWorkload:
    """P1..P4 workload; P4 emits one pair per matching build rid"""
    n = int(np.asarray(probe_keys).shape[0])
    m = match_counts(build_keys, probe_keys)
    units = {
        StepId.P1: _ones(n),
        StepId.P2: _ones(n),
        StepId.P3: probe_measure(build_keys, probe_keys, layout),
        StepId.P4: np.maximum(1, m).astype(np.float64),
    }
    alloc = {
        StepId.P1: _zeros(n),
        StepId.P2: _zeros(n),
        StepId.P3: _zeros(n),
        StepId.P4: m * PAIR_BYTES,
    }
    return SeriesWorkload(phase, PROBE_STEPS, units, alloc, out_items=m, download_output=True)


def partition_workload(n: int, phase: str) -> SeriesWorkload:
    units = {step: _ones(n) for step in PARTITION_STEPS}
    alloc = {StepId.N1: _zeros(n), StepId.N2: _zeros(n), StepId.N3: np.full(n, ITEM_BYTES, dtype=np.int64)}
    # Partitioned tuples are written back to host memory
    return SeriesWorkload(
        phase,
        PARTITION_STEPS,
        units,
        alloc,
        out_items=np.ones(n, dtype=np.int64),
        output_bytes=ITEM_BYTES,
        download_output=True,
    )


def coarse_workload(
    build: SeriesWorkload,
    probe: SeriesWorkload,
    r_part: np.ndarray,
    s_part: np.ndarray,
    P: int,
    devices: tuple[DeviceProfile, DeviceProfile],
) -> SeriesWorkload:
    """One item per partition pair; a lane runs the pair's whole SHJ"""
    override: dict[tuple[StepId, str], np.ndarray] = {}
    for device in devices:
        per_tuple_r = sum(device.item_cost(s) * build.units[s] for s in BUILD_STEPS)
        per_tuple_s = sum(device.item_cost(s) * probe.units[s] for s in PROBE_STEPS)
        pair_cost = np.bincount(r_part, weights=per_tuple_r, minlength=P) + np.bincount(
            s_part, weights=per_tuple_s, minlength=P
        )
        override[(StepId.PAIR, device.kind.value)] = pair_cost * device.worker_count
    r_bytes = sum(build.alloc_bytes[s] for s in BUILD_STEPS)
    s_bytes = probe.alloc_bytes[StepId.P4]
    alloc = np.bincount(r_part, weights=r_bytes, minlength=P) + np.bincount(
        s_part, weights=s_bytes, minlength=P
    )
    assert probe.out_items is not None
    out = np.bincount(s_part, weights=probe.out_items, minlength=P).astype(np.int64)
    r_size = np.bincount(r_part, minlength=P)
    s_size = np.bincount(s_part, minlength=P)
    return SeriesWorkload(
        JOIN_PHASE,
        (StepId.PAIR,),
        {StepId.PAIR: np.maximum(1, r_size + s_size).astype(np.float64)},
        {StepId.PAIR: alloc.astype(np.int64)},
        out_items=out,
        lane_override=override,
        # A pair item carries both sides' tuples
        item_bytes=ITEM_BYTES * max(1, int((r_size + s_size).sum()) // max(1, P)),
        download_output=True,
    )


@dataclass
class JoinWorkload:
    """Phases of one join in execution order"""

    algorithm: Algorithm
    phases: list[SeriesWorkload]
    layout: TableLayout
    probe_order: np.ndarray
    matches: int
    coarse: bool = False
    build_keys: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.uint32))

    def phase(self, name: str) -> SeriesWorkload:
        for w in self.phases:
            if w.phase == name:
                return w
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [w.phase for w in self.phases]


def partition_bits_of(config: EngineConfig) -> tuple[int, int]:
    """(pass_bits, passes), collapsed to (0, 0) when partitioning is off"""
    pb, g = config.partition.pass_bits, config.partition.passes
    if pb == 0 or g == 0:
        return 0, 0
    if pb * g + config.hashtable.hash_shift > 32:
        raise ValueError(f"pass_bits * passes + hash_shift must be <= 32, got {pb * g + config.hashtable.hash_shift}")
    return pb, g


def build_join_workload(
    algorithm: Algorithm,
    R: Relation,
    S: Relation,
    config: EngineConfig,
    coarse: bool = False,
    devices: Optional[tuple[DeviceProfile, DeviceProfile]] = None,
) -> JoinWorkload:
    """Static workload of every phase of a join.

    PHJ partition passes see tuples in stable partition order of the
    previous pass; build and probe see them in final partition order.
    The probe series is reordered by key-list length when grouping is on.
    """
    seed = config.hashtable.seed
    bf = config.hashtable.bucket_factor
    outer = config.hashtable.hash_shift
    phases: list[SeriesWorkload] = []
    r_keys, s_keys = R.keys, S.keys
    bits = 0
    if algorithm is Algorithm.PHJ:
        pb, g = partition_bits_of(config)
        bits = pb * g
        for name, keys in (("r", R.keys), ("s", S.keys)):
            ids = partition_ids(keys, bits, seed, outer)
            order = np.arange(len(keys), dtype=np.int64)
            for p in range(g):
                phases.append(partition_workload(len(keys), partition_phase(name, p)))
                # Pass p splits every partition of pass p - 1 by its next digit
                prefix = ids[order] >> pass_shift(p, pb, g)
                order = order[np.argsort(prefix, kind="stable")]
            if name == "r":
                r_keys = keys[order]
            else:
                s_keys = keys[order]

    layout = TableLayout.for_keys(len(R), bf, bits, seed, outer)
    build = build_workload(r_keys, layout)
    probe = probe_workload(r_keys, s_keys, layout)
    probe_order = np.arange(len(s_keys), dtype=np.int64)
    if config.scheduler.groups > 1 and not coarse:
        probe_order = group_by_workload(probe_order, probe.units[StepId.P3], config.scheduler.groups)
        probe = probe.permute(probe_order)

    if coarse:
        if devices is None:
            raise ValueError("coarse workload needs the device profiles")
        P = 1 << bits
        r_part = partition_ids(r_keys, bits, seed, outer) if bits else np.zeros(len(r_keys), dtype=np.int64)
        s_part = partition_ids(s_keys, bits, seed, outer) if bits else np.zeros(len(s_keys), dtype=np.int64)
        phases.append(coarse_workload(build, probe, r_part, s_part, P, devices))
    else:
        phases.extend([build, probe])
    matches = int(probe.out_items.sum()) if probe.out_items is not None else 0
    return JoinWorkload(algorithm, phases, layout, probe_order, matches, coarse, build_keys=r_keys)
