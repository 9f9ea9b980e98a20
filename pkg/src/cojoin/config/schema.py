"""Configuration schema using Pydantic"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field


class Algorithm(str, Enum):
    """Hash join algorithms"""

    SHJ = "shj"  # Simple hash join
    PHJ = "phj"  # Radix-partitioned hash join


class Scheme(str, Enum):
    """Co-processing schemes"""

    CPU = "cpu"  # CPU-only
    GPU = "gpu"  # GPU-only
    OL = "ol"  # Off-loading
    DD = "dd"  # Data-dividing
    PL = "pl"  # Pipelined
    BASIC_UNIT = "basicunit"  # Dynamic chunk scheduling
    COARSE_PL = "coarsepl"  # PHJ-PL with one partition pair per step


class Architecture(str, Enum):
    """Memory architecture of the device pair"""

    COUPLED = "coupled"  # Shared memory, no transfers
    DISCRETE = "discrete"  # Emulated PCI-e link


class TableMode(str, Enum):
    """Hash table sharing between devices"""

    SHARED = "shared"
    SEPARATE = "separate"


class AllocatorConfig(BaseModel):
    """Arena allocator configuration"""

    block_size: int = Field(
        default=2048,
        ge=0,
        description="Block grant size in bytes (0 selects the basic per-item allocator)",
    )
    arena_bytes: Optional[int] = Field(
        default=None,
        gt=0,
        description="Arena capacity in bytes (default: sized from the inputs)",
    )


class HashTableConfig(BaseModel):
    """Hash table configuration"""

    bucket_factor: float = Field(
        default=1.0,
        gt=0.0,
        description="Buckets = next power of two >= factor * |R|",
    )
    seed: int = Field(default=0, ge=0, lt=2**32, description="MurmurHash2 seed")
    latch_stripes: int = Field(
        default=4096,
        gt=0,
        description="Number of lock stripes backing the per-bucket latches",
    )
    hash_shift: int = Field(
        default=0,
        ge=0,
        le=31,
        description="Low hash bits skipped by bucket numbers (set when the inputs are one radix partition)",
    )


class PartitionConfig(BaseModel):
    """Radix partitioning configuration"""

    pass_bits: int = Field(default=6, ge=0, le=16, description="Radix bits per pass")
    passes: int = Field(default=2, ge=0, le=8, description="Number of partitioning passes")


class SchedulerConfig(BaseModel):
    """Plan search and execution configuration"""

    delta: float = Field(default=0.02, gt=0.0, le=1.0, description="Ratio grid step")
    groups: int = Field(default=1, ge=1, description="Workload groups for divergence reduction")
    handoff_cap: int = Field(default=1024, ge=1, description="Handoff queue capacity in blocks")
    dispatch_items: int = Field(
        default=1024,
        ge=64,
        description="Items per dispatched chunk (a multiple of the wavefront width)",
    )
    max_chunks: int = Field(
        default=256,
        ge=1,
        description="Upper bound on chunks per device per step in the timeline",
    )
    chunk_size: int = Field(default=65536, ge=1, description="BasicUnit chunk size in tuples")
    pl_budget: int = Field(
        default=20_000_000,
        ge=1,
        description="Maximum ratio vectors evaluated by PL search",
    )
    exhaustive: bool = Field(default=False, description="Disable PL branch-and-bound pruning")


class LinkConfig(BaseModel):
    """Emulated PCI-e link for discrete mode"""

    latency: float = Field(default=0.015e-3, ge=0.0, description="Link latency in seconds")
    bandwidth: float = Field(
        default=3 * 2**30,
        gt=0.0,
        description="Link bandwidth in bytes per second",
    )


class BenchConfig(BaseModel):
    """Benchmark harness defaults"""

    seed: int = Field(default=42, ge=0, description="Default RNG seed")
    runs: int = Field(default=1000, ge=1, description="Monte-Carlo runs")
    buffer_limit: int = Field(
        default=512 * 2**20,
        gt=0,
        description="Zero-copy buffer size in bytes",
    )
    chunk_tuples: int = Field(
        default=16 * 2**20,
        gt=0,
        description="Tuples per out-of-buffer partitioning chunk",
    )
    host_copy_bandwidth: float = Field(
        default=8 * 2**30,
        gt=0.0,
        description="Host memory copy bandwidth in bytes per second",
    )


class EngineConfig(BaseModel):
    """Main configuration model"""

    allocator: AllocatorConfig = Field(default_factory=AllocatorConfig)
    hashtable: HashTableConfig = Field(default_factory=HashTableConfig)
    partition: PartitionConfig = Field(default_factory=PartitionConfig)
    scheduler: SchedulerConfig = Field(default_factory=SchedulerConfig)
    link: LinkConfig = Field(default_factory=LinkConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
    architecture: Architecture = Field(default=Architecture.COUPLED)
    table_mode: TableMode = Field(default=TableMode.SHARED)

    class Config:
        extra = "ignore"
