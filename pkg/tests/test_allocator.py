"""Tests for the block-granular arena allocator"""

import threading

import numpy as np
import pytest

from cojoin.errors import ArenaExhausted, BlockFull
from cojoin.memory.allocator import Arena, GroupAllocator, align_up, arena_new, estimate_grants


class TestArena:
    """Test global cursor grants"""

    def test_grants_are_consecutive(self):
        """An 8 KiB arena hands out four 2 KiB blocks, then is exhausted"""
        arena = arena_new(8 * 1024)
        offsets = [arena.grant_block(2048).offset for _ in range(4)]
        assert offsets == [0, 2048, 4096, 6144]
        assert arena.global_ops == 4

        with pytest.raises(ArenaExhausted) as exc:
            arena.grant_block(2048)
        assert exc.value.cursor == 8192
        assert exc.value.error_type == "arena_exhausted"
        assert arena.cursor == 8192

    def test_reset(self):
        """Reset starts a new phase at offset 0"""
        arena = Arena(4096)
        arena.grant_block(1024)
        arena.reset()
        assert arena.cursor == 0
        assert arena.global_ops == 0
        assert arena.grant_block(1024).offset == 0

    def test_invalid_sizes(self):
        """Capacity and block size must be positive"""
        with pytest.raises(ValueError):
            Arena(0)
        with pytest.raises(ValueError):
            Arena(64).grant_block(0)

    def test_concurrent_grants_disjoint(self):
        """Racing threads never receive overlapping blocks"""
        arena = Arena(64 * 1024)
        offsets: list[int] = []
        lock = threading.Lock()

        def grab() -> None:
            for _ in range(32):
                grant = arena.grant_block(64)
                with lock:
                    offsets.append(grant.offset)

        threads = [threading.Thread(target=grab) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(offsets) == list(range(0, 256 * 64, 64))


class TestBlockGrant:
    """Test local bump allocation"""

    def test_local_alloc(self):
        """Local allocations advance inside the block"""
        grant = Arena(4096).grant_block(64)
        assert grant.local_alloc(16) == 0
        assert grant.local_alloc(8) == 16
        assert grant.remaining == 40

    def test_block_full(self):
        """Requests past the block end raise BlockFull"""
        grant = Arena(4096).grant_block(32)
        grant.local_alloc(24)
        with pytest.raises(BlockFull):
            grant.local_alloc(16)


class TestGroupAllocator:
    """Test the per-work-group front end"""

    def test_one_grant_per_block(self):
        """Requests share a block until it is full"""
        alloc = GroupAllocator(Arena(1 << 16), block_size=64)
        offsets = [alloc.alloc(16) for _ in range(5)]
        assert offsets[:4] == [0, 16, 32, 48]
        assert offsets[4] == 64
        assert alloc.global_ops == 2

    def test_basic_allocator(self):
        """Without a block size every request is a global operation"""
        alloc = GroupAllocator(Arena(1 << 16), block_size=None)
        for _ in range(5):
            alloc.alloc(12)
        assert alloc.global_ops == 5
        assert alloc.arena.cursor == 5 * 16

    def test_oversized_request(self):
        """A request larger than the block gets a dedicated grant"""
        alloc = GroupAllocator(Arena(1 << 16), block_size=64)
        alloc.alloc(8)
        offset = alloc.alloc(200)
        assert offset == 64
        assert alloc.grants[-1].size == 200

    def test_alignment(self):
        """Allocations are 8-byte aligned"""
        assert align_up(1) == 8
        assert align_up(8) == 8
        assert align_up(9) == 16
        alloc = GroupAllocator(Arena(4096), block_size=256)
        assert [alloc.alloc(3) for _ in range(3)] == [0, 8, 16]


class TestEstimateGrants:
    """Test the static grant count"""

    def test_block_counts(self):
        """ceil(bytes / block) per group"""
        assert estimate_grants(np.array([0, 1, 2048, 2049]), 2048) == 0 + 1 + 1 + 2

    def test_basic_counts_groups_with_bytes(self):
        """The basic allocator charges one operation per allocating item"""
        assert estimate_grants(np.array([0, 16, 8]), None) == 2
