"""Columnar relations, synthetic generators and the binary relation format"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from cojoin.errors import LengthMismatchError, RelationFormatError

MAGIC = b"HJRL"
VERSION = 1
HEADER = struct.Struct("<4sIQ")
RNG_ALGORITHM = "PCG64"
KEY_DOMAIN = (0, 2**32 - 1)


class Distribution(str, Enum):
    """Key distributions"""

    UNIFORM = "uniform"
    SKEWED = "skewed"


@dataclass(eq=False)
class Relation:
    """Two-attribute relation stored as parallel uint32 arrays.

    Arrays are made read-only on construction so a relation can be shared
    across executor threads.
    """

    rids: np.ndarray
    keys: np.ndarray

    def __post_init__(self) -> None:
        self.rids = np.ascontiguousarray(self.rids, dtype=np.uint32)
        self.keys = np.ascontiguousarray(self.keys, dtype=np.uint32)
        if self.rids.shape != self.keys.shape or self.rids.ndim != 1:
            raise ValueError(
                f"rids and keys must be 1-D arrays of equal length, "
                f"got {self.rids.shape} and {self.keys.shape}"
            )
        self.rids.flags.writeable = False
        self.keys.flags.writeable = False

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return bool(np.array_equal(self.rids, other.rids) and np.array_equal(self.keys, other.keys))

    __hash__ = None  # type: ignore[assignment]

    @property
    def nbytes(self) -> int:
        """In-memory footprint of both columns"""
        return 8 * len(self)

    @classmethod
    def empty(cls) -> Relation:
        return cls(np.empty(0, dtype=np.uint32), np.empty(0, dtype=np.uint32))

    def take(self, index: np.ndarray) -> Relation:
        """Return the tuples at the given positions"""
        return Relation(self.rids[index], self.keys[index])


@dataclass
class GenSpec:
    """Parameters of a generated relation"""

    n: int
    distribution: Distribution = Distribution.UNIFORM
    s_percent: int = 0
    key_range: tuple[int, int] = KEY_DOMAIN
    seed: int = 42
    selectivity: Optional[float] = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if not 0 <= self.s_percent <= 100:
            raise ValueError(f"s_percent must be in [0, 100], got {self.s_percent}")
        if self.selectivity is not None and not 0.0 <= self.selectivity <= 1.0:
            raise ValueError(f"selectivity must be in [0, 1], got {self.selectivity}")
        _check_range(self.key_range)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "distribution": self.distribution.value,
            "s_percent": self.s_percent,
            "key_range": list(self.key_range),
            "seed": self.seed,
            "selectivity": self.selectivity,
            "rng": RNG_ALGORITHM,
            **self.extra,
        }


def _check_range(key_range: tuple[int, int]) -> None:
    lo, hi = key_range
    if lo > hi or lo < KEY_DOMAIN[0] or hi > KEY_DOMAIN[1]:
        raise ValueError(f"key_range must be a non-empty sub-range of [0, 2^32), got {key_range}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_uniform(n: int, key_range: tuple[int, int] = KEY_DOMAIN, seed: int = 42) -> Relation:
    """Generate n tuples with keys drawn independently and uniformly.

    Args:
        n: Tuple count
        key_range: Inclusive key domain
        seed: RNG seed

    Returns:
        Relation with rids 0..n-1
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    _check_range(key_range)
    lo, hi = key_range
    keys = _rng(seed).integers(lo, hi, size=n, dtype=np.uint64, endpoint=True)
    return Relation(np.arange(n, dtype=np.uint32), keys.astype(np.uint32))


def gen_skewed(
    n: int,
    s_percent: int,
    seed: int = 42,
    key_range: tuple[int, int] = KEY_DOMAIN,
) -> Relation:
    """Generate n tuples where s% of them duplicate another tuple's key.

    ``d = n*s//100`` tuples are designated duplicates. Each copies the key of
    a distinct partner drawn from the n-d unique keys, so every duplicated
    key has multiplicity exactly 2. When s > 50 there are fewer unique keys
    than duplicates and partners are reused round-robin.

    Args:
        n: Tuple count
        s_percent: Percentage of duplicate tuples
        seed: RNG seed
        key_range: Inclusive key domain

    Returns:
        Relation with rids 0..n-1 in shuffled key order
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0 <= s_percent <= 100:
        raise ValueError(f"s_percent must be in [0, 100], got {s_percent}")
    _check_range(key_range)

    rng = _rng(seed)
    dups = n * s_percent // 100
    unique_count = n - dups
    if n > 0 and unique_count == 0:
        unique_count, dups = 1, n - 1

    lo, hi = key_range
    span = hi - lo + 1
    if unique_count > span:
        raise ValueError(f"key_range holds {span} keys, {unique_count} unique keys requested")
    unique = rng.choice(span, size=unique_count, replace=False).astype(np.uint64) + lo

    if dups <= unique_count:
        partners = rng.choice(unique_count, size=dups, replace=False)
    else:
        partners = np.arange(dups) % unique_count
    keys = np.concatenate([unique, unique[partners]]).astype(np.uint32)
    keys = keys[rng.permutation(n)]
    return Relation(np.arange(n, dtype=np.uint32), keys)


def _complement_keys(build_keys: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Map ranks in [0, 2^32 - |distinct build keys|) to keys absent from build.

    For sorted distinct keys u, the k-th absent value is k plus the number of
    u[j] with u[j] - j <= k.
    """
    distinct = np.unique(build_keys).astype(np.int64)
    shifted = distinct - np.arange(distinct.shape[0], dtype=np.int64)
    return (ranks + np.searchsorted(shifted, ranks, side="right")).astype(np.uint32)


def gen_probe(build: Relation, n: int, selectivity: float, seed: int = 42) -> Relation:
    """Generate a probe relation against a build relation.

    Exactly ``floor(n*selectivity)`` tuples carry a key sampled from the
    build tuples; the rest carry keys absent from the build key set.

    Args:
        build: Build relation
        n: Probe tuple count
        selectivity: Fraction of matching probe tuples
        seed: RNG seed

    Returns:
        Probe relation with rids 0..n-1
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0.0 <= selectivity <= 1.0:
        raise ValueError(f"selectivity must be in [0, 1], got {selectivity}")
    matching = int(np.floor(n * selectivity))
    if matching > 0 and len(build) == 0:
        raise ValueError("selectivity > 0 requires a non-empty build relation")

    rng = _rng(seed)
    hits = build.keys[rng.integers(0, len(build), size=matching)] if matching else np.empty(0, np.uint32)

    misses_needed = n - matching
    absent = 2**32 - np.unique(build.keys).shape[0]
    ranks = rng.integers(0, absent, size=misses_needed, dtype=np.int64)
    misses = _complement_keys(build.keys, ranks)

    keys = np.concatenate([hits.astype(np.uint32), misses])
    keys = keys[rng.permutation(n)]
    return Relation(np.arange(n, dtype=np.uint32), keys)


def write_bin(path: Path, rel: Relation) -> None:
    """Write a relation in the HJRL binary format (little-endian)"""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, VERSION, len(rel)))
        f.write(rel.rids.astype("<u4").tobytes())
        f.write(rel.keys.astype("<u4").tobytes())


def read_bin(path: Path) -> Relation:
    """Read a relation written by ``write_bin``.

    Raises:
        RelationFormatError: Bad magic or version
        LengthMismatchError: File size disagrees with the header length
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise RelationFormatError(str(path), f"header needs {HEADER.size} bytes")
    magic, version, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RelationFormatError(str(path), f"bad magic {magic!r}")
    if version != VERSION:
        raise RelationFormatError(str(path), f"unsupported version {version}")
    expected = HEADER.size + 8 * length
    if len(data) != expected:
        raise LengthMismatchError(str(path), expected, len(data))
    body = np.frombuffer(data, dtype="<u4", offset=HEADER.size)
    return Relation(body[:length].copy(), body[length:].copy())


def sidecar_path(path: Path) -> Path:
    return Path(str(path) + ".meta.yaml")


def write_sidecar(path: Path, spec: GenSpec) -> Path:
    """Record generator parameters next to a relation file"""
    meta = sidecar_path(path)
    with open(meta, "w", encoding="utf-8") as f:
        yaml.safe_dump(spec.to_dict(), f, default_flow_style=False)
    return meta


def read_sidecar(path: Path) -> dict[str, Any]:
    meta = sidecar_path(path)
    if not meta.exists():
        return {}
    with open(meta, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return data if isinstance(data, dict) else {}


def generate(spec: GenSpec, build: Optional[Relation] = None) -> Relation:
    """Generate a relation from a GenSpec.

    A spec with ``selectivity`` set produces a probe relation against build.
    """
    if spec.selectivity is not None:
        if build is None:
            raise ValueError("probe generation needs a build relation")
        return gen_probe(build, spec.n, spec.selectivity, spec.seed)
    if spec.distribution == Distribution.SKEWED:
        return gen_skewed(spec.n, spec.s_percent, spec.seed, spec.key_range)
    return gen_uniform(spec.n, spec.key_range, spec.seed)
