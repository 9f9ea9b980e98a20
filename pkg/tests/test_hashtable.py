"""Tests for the arena hash table"""

import numpy as np
import pytest

from cojoin.memory.allocator import Arena, GroupAllocator
from cojoin.memory.hashtable import (
    KEY_NODE_BYTES,
    NONE,
    RID_NODE_BYTES,
    HashTable,
    bucket_index,
    murmur2,
    murmur2_array,
    next_pow2,
    table_bytes,
)


def _table(num_buckets: int = 16, seed: int = 0, partition_bits: int = 0) -> HashTable:
    return HashTable(Arena(1 << 20), num_buckets, seed=seed, partition_bits=partition_bits)


class TestMurmur2:
    """Test the hash function"""

    def test_known_value(self):
        """Key 0 with seed 0"""
        assert murmur2(0, 0) == 0xB469B2CC

    def test_vectorized_matches_scalar(self):
        """The numpy version agrees with the scalar version"""
        keys = np.array([0, 1, 42, 2**31, 2**32 - 1, 123456789], dtype=np.uint32)
        for seed in (0, 7, 2**32 - 1):
            expected = [murmur2(int(k), seed) for k in keys]
            assert murmur2_array(keys, seed).tolist() == expected

    def test_seed_changes_hash(self):
        """Different seeds give different hashes"""
        assert murmur2(42, 0) != murmur2(42, 1)


class TestBucketIndex:
    """Test bucket addressing"""

    def test_next_pow2(self):
        """Smallest power of two at least n"""
        assert [next_pow2(n) for n in (0, 1, 2, 3, 1000, 1024)] == [1, 1, 2, 4, 1024, 1024]

    def test_low_bits_without_partitions(self):
        """Bucket is the hash masked to the table size"""
        h = np.array([0x12345678], dtype=np.uint32)
        assert bucket_index(h, 256).tolist() == [0x78]

    def test_partition_bits_select_region(self):
        """Low bits choose the partition, the bits above choose the bucket"""
        h = np.array([0b1011_0110], dtype=np.uint32)
        # partition = 0b10, local = (h >> 2) & 0b111 = 0b101
        assert bucket_index(h, 8, partition_bits=2).tolist() == [0b10 * 8 + 0b101]


class TestHashTable:
    """Test insert, lookup and merge"""

    def test_rejects_non_power_of_two(self):
        """Bucket counts must be powers of two"""
        with pytest.raises(ValueError):
            _table(num_buckets=12)

    def test_insert_lookup(self):
        """Duplicate keys share one key node and keep every rid"""
        table = _table()
        table.insert(5, 100)
        table.insert(5, 101)
        table.insert(9, 200)

        assert sorted(table.lookup(5)) == [100, 101]
        assert table.lookup(9) == [200]
        assert table.lookup(77) == []
        assert len(table) == 3
        assert int(table.key_counts.sum()) == 2

    def test_find_counts_visits(self):
        """find walks the key list and reports the nodes visited"""
        table = _table(num_buckets=1)
        for key in (1, 2, 3):
            table.insert(key, key)
        # Keys are prepended, so 1 is last in the list
        node, visited = table.find(0, 1)
        assert node != NONE
        assert visited == 3
        node, visited = table.find(0, 99)
        assert node == NONE
        assert visited == 3

    def test_items_round_trip(self):
        """items yields every stored pair"""
        table = _table(num_buckets=8)
        keys = np.array([3, 3, 4, 10, 10, 10], dtype=np.uint32)
        rids = np.arange(6, dtype=np.uint32)
        table.insert_many(keys, rids)
        assert sorted(table.items()) == sorted(zip(keys.tolist(), rids.tolist()))

    def test_arena_usage(self):
        """A key node and a rid node per new key, a rid node per duplicate"""
        table = HashTable(Arena(1 << 16), 8, block_size=None)
        table.insert_many(np.array([1, 1, 2], dtype=np.uint32), np.arange(3, dtype=np.uint32))
        assert table.arena.cursor == 2 * KEY_NODE_BYTES + 3 * RID_NODE_BYTES
        assert table_bytes(3, 2) == table.arena.cursor

    def test_merge(self):
        """Merging moves every pair and empties the source"""
        dst = _table(seed=3)
        src = _table(seed=3)
        dst.insert(1, 10)
        src.insert(1, 11)
        src.insert(2, 20)

        stats = dst.merge(src)

        assert stats.key_nodes == 2
        assert stats.rids == 2
        assert sorted(dst.lookup(1)) == [10, 11]
        assert dst.lookup(2) == [20]
        assert len(src) == 0
        assert list(src.items()) == []

    def test_merge_layout_mismatch(self):
        """Tables with different seeds cannot merge"""
        with pytest.raises(ValueError, match="same buckets"):
            _table(seed=1).merge(_table(seed=2))

    def test_partitioned_table_lookup(self):
        """Lookups work when the bucket space is split by partition bits"""
        table = _table(num_buckets=4, partition_bits=3)
        keys = np.arange(100, dtype=np.uint32) * 7
        table.insert_many(keys, np.arange(100, dtype=np.uint32))
        assert table.total_buckets == 32
        for key, rid in ((0, 0), (7 * 50, 50), (7 * 99, 99)):
            assert table.lookup(key) == [rid]

    def test_separate_allocators(self):
        """Two work groups allocate from one arena without overlap"""
        table = _table()
        a = GroupAllocator(table.arena, 64)
        b = GroupAllocator(table.arena, 64)
        table.insert(1, 1, a)
        table.insert(2, 2, b)
        assert a.grants[0].offset != b.grants[0].offset
        assert table.lookup(1) == [1]
        assert table.lookup(2) == [2]
