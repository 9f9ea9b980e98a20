"""Chained hash table laid out in an arena.

Bucket headers hold a tuple count and the offset of a key list. Each key
node owns a rid list. Nodes live in arena words and refer to each other by
arena-relative byte offsets, with ``NONE`` marking the end of a list.

Word layout:
    KeyNode (16 B): key, rid_head, next, rid_count
    RidNode (8 B):  rid, next
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from cojoin.config.schema import TableMode

from .allocator import DEFAULT_BLOCK_SIZE, Arena, GroupAllocator

NONE = 0xFFFFFFFF
KEY_NODE_BYTES = 16
RID_NODE_BYTES = 8

_MASK32 = 0xFFFFFFFF
_M = 0x5BD1E995
_R = 24


def murmur2(key: int, seed: int = 0) -> int:
    """MurmurHash2 (32-bit) of a 4-byte little-endian key"""
    h = (seed ^ 4) & _MASK32
    k = (key * _M) & _MASK32
    k ^= k >> _R
    k = (k * _M) & _MASK32
    h = (h * _M) & _MASK32
    h ^= k
    h ^= h >> 13
    h = (h * _M) & _MASK32
    h ^= h >> 15
    return h


def murmur2_array(keys: np.ndarray, seed: int = 0) -> np.ndarray:
    """Vectorized murmur2 over a uint32 key array"""
    mask = np.uint64(_MASK32)
    m = np.uint64(_M)
    k = np.asarray(keys, dtype=np.uint32).astype(np.uint64)
    k = (k * m) & mask
    k ^= k >> np.uint64(_R)
    k = (k * m) & mask
    h = np.full(k.shape, ((seed ^ 4) * _M) & _MASK32, dtype=np.uint64)
    h ^= k
    h ^= h >> np.uint64(13)
    h = (h * m) & mask
    h ^= h >> np.uint64(15)
    return h.astype(np.uint32)


def next_pow2(n: int) -> int:
    """Smallest power of two >= max(n, 1)"""
    return 1 << max(0, int(n) - 1).bit_length()


def bucket_index(
    hashes: np.ndarray, num_buckets: int, partition_bits: int = 0, hash_shift: int = 0
) -> np.ndarray:
    """Global bucket index for hash values.

    The lowest ``hash_shift`` bits are skipped; an outer radix partitioning
    already fixed them. Of the remaining bits, the low
    ``partition_bits`` select the partition and the bits above them the
    bucket inside it.
    """
    h = np.asarray(hashes, dtype=np.uint32) >> np.uint32(hash_shift)
    local = (h >> np.uint32(partition_bits)) & np.uint32(num_buckets - 1)
    if partition_bits == 0:
        return local.astype(np.int64)
    part = h & np.uint32((1 << partition_bits) - 1)
    return (part.astype(np.int64) * num_buckets) + local.astype(np.int64)


@dataclass
class MergeStats:
    """Work done by a merge"""

    key_nodes: int = 0
    rids: int = 0


class HashTable:
    """Bucket headers -> key lists -> rid lists, addressed by arena offsets"""

    def __init__(
        self,
        arena: Arena,
        num_buckets: int,
        seed: int = 0,
        mode: TableMode = TableMode.SHARED,
        partition_bits: int = 0,
        latch_stripes: int = 4096,
        block_size: Optional[int] = DEFAULT_BLOCK_SIZE,
        hash_shift: int = 0,
    ) -> None:
        if num_buckets <= 0 or num_buckets & (num_buckets - 1):
            raise ValueError(f"num_buckets must be a power of two, got {num_buckets}")
        if hash_shift < 0 or partition_bits + hash_shift > 32:
            raise ValueError(f"partition_bits + hash_shift must be in [0, 32], got {partition_bits + hash_shift}")
        self.arena = arena
        self.num_buckets = num_buckets
        self.seed = seed
        self.mode = mode
        self.partition_bits = partition_bits
        self.hash_shift = hash_shift
        total = num_buckets << partition_bits
        self.counts = np.zeros(total, dtype=np.uint32)
        self.key_heads = np.full(total, NONE, dtype=np.uint32)
        self.key_counts = np.zeros(total, dtype=np.uint32)
        stripes = next_pow2(min(latch_stripes, total))
        self._latches = [threading.Lock() for _ in range(stripes)]
        self._stripe_mask = stripes - 1
        # Single-threaded convenience allocator; concurrent callers pass their own
        self.allocator = GroupAllocator(arena, block_size)

    @property
    def total_buckets(self) -> int:
        return int(self.counts.shape[0])

    def __len__(self) -> int:
        return int(self.counts.sum(dtype=np.int64))

    def latch(self, bucket: int) -> threading.Lock:
        """Latch guarding a bucket's key list"""
        return self._latches[bucket & self._stripe_mask]

    def hash_keys(self, keys: np.ndarray) -> np.ndarray:
        return murmur2_array(keys, self.seed)

    def buckets_of(self, keys: np.ndarray) -> np.ndarray:
        return bucket_index(self.hash_keys(keys), self.num_buckets, self.partition_bits, self.hash_shift)

    def bucket_of(self, key: int) -> int:
        return int(self.buckets_of(np.array([key], dtype=np.uint32))[0])

    # Step-level operations

    def find(self, bucket: int, key: int) -> tuple[int, int]:
        """Walk a key list without latching.

        Returns:
            (key node offset or NONE, key nodes visited)
        """
        words = self.arena.words
        node = int(self.key_heads[bucket])
        visited = 0
        while node != NONE:
            visited += 1
            w = node >> 2
            if int(words[w]) == key:
                return node, visited
            node = int(words[w + 2])
        return NONE, visited

    def find_or_create(self, bucket: int, key: int, alloc: GroupAllocator) -> tuple[int, int]:
        """Return the key node for key, creating it at the list head if absent"""
        with self.latch(bucket):
            node, visited = self.find(bucket, key)
            if node != NONE:
                return node, visited
            node = alloc.alloc(KEY_NODE_BYTES)
            w = node >> 2
            words = self.arena.words
            words[w] = key
            words[w + 1] = NONE
            words[w + 2] = self.key_heads[bucket]
            words[w + 3] = 0
            self.key_heads[bucket] = node
            self.key_counts[bucket] += 1
            return node, visited + 1

    def append_rid(self, bucket: int, node: int, rid: int, alloc: GroupAllocator) -> None:
        """Insert rid at the head of the key node's rid list"""
        with self.latch(bucket):
            rid_node = alloc.alloc(RID_NODE_BYTES)
            words = self.arena.words
            w = node >> 2
            r = rid_node >> 2
            words[r] = rid
            words[r + 1] = words[w + 1]
            words[w + 1] = rid_node
            words[w + 3] += 1
            self.counts[bucket] += 1

    def rids_of(self, node: int) -> list[int]:
        """All rids in a key node's rid list"""
        if node == NONE:
            return []
        words = self.arena.words
        out: list[int] = []
        rid_node = int(words[(node >> 2) + 1])
        while rid_node != NONE:
            r = rid_node >> 2
            out.append(int(words[r]))
            rid_node = int(words[r + 1])
        return out

    # Tuple-level operations

    def insert(self, key: int, rid: int, alloc: Optional[GroupAllocator] = None) -> None:
        """Insert one (key, rid) pair"""
        alloc = alloc or self.allocator
        bucket = self.bucket_of(key)
        node, _ = self.find_or_create(bucket, key, alloc)
        self.append_rid(bucket, node, rid, alloc)

    def insert_many(
        self, keys: np.ndarray, rids: np.ndarray, alloc: Optional[GroupAllocator] = None
    ) -> None:
        alloc = alloc or self.allocator
        buckets = self.buckets_of(keys)
        for bucket, key, rid in zip(buckets.tolist(), keys.tolist(), rids.tolist()):
            node, _ = self.find_or_create(bucket, key, alloc)
            self.append_rid(bucket, node, rid, alloc)

    def lookup(self, key: int) -> list[int]:
        """Rids inserted for key, possibly empty"""
        node, _ = self.find(self.bucket_of(key), key)
        return self.rids_of(node)

    def key_nodes(self, bucket: int) -> Iterator[tuple[int, int]]:
        """Yield (key, node offset) along a bucket's key list"""
        words = self.arena.words
        node = int(self.key_heads[bucket])
        while node != NONE:
            w = node >> 2
            yield int(words[w]), node
            node = int(words[w + 2])

    def items(self) -> Iterator[tuple[int, int]]:
        """Yield every stored (key, rid) pair"""
        for bucket in np.flatnonzero(self.key_heads != NONE).tolist():
            for key, node in self.key_nodes(bucket):
                for rid in self.rids_of(node):
                    yield key, rid

    def clear(self) -> None:
        self.counts[:] = 0
        self.key_counts[:] = 0
        self.key_heads[:] = NONE

    def merge(self, src: HashTable, alloc: Optional[GroupAllocator] = None) -> MergeStats:
        """Move every (key, rid) of src into this table; src is left empty.

        Raises:
            ValueError: Tables differ in bucket layout or hash seed
        """
        if (
            src.num_buckets != self.num_buckets
            or src.partition_bits != self.partition_bits
            or src.hash_shift != self.hash_shift
            or src.seed != self.seed
        ):
            raise ValueError("merge needs tables with the same buckets and hash seed")
        alloc = alloc or self.allocator
        stats = MergeStats()
        for bucket in np.flatnonzero(src.key_heads != NONE).tolist():
            for key, src_node in src.key_nodes(bucket):
                stats.key_nodes += 1
                node, _ = self.find_or_create(bucket, key, alloc)
                for rid in src.rids_of(src_node):
                    self.append_rid(bucket, node, rid, alloc)
                    stats.rids += 1
        src.clear()
        return stats


def table_bytes(tuples: int, distinct_keys: int) -> int:
    """Arena bytes a table needs for the given contents (nodes only)"""
    return KEY_NODE_BYTES * distinct_keys + RID_NODE_BYTES * tuples
