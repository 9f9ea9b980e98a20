"""Block-granular arena allocator.

A single global cursor hands out blocks; each work group serves its own
item-level requests from the current block and only touches the global
cursor again when the block is full.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cojoin.errors import ArenaExhausted, BlockFull

ALIGNMENT = 8
DEFAULT_BLOCK_SIZE = 2048


def align_up(nbytes: int, alignment: int = ALIGNMENT) -> int:
    """Round nbytes up to a multiple of alignment"""
    return (nbytes + alignment - 1) // alignment * alignment


class Arena:
    """Pre-allocated byte region with a monotonically increasing cursor"""

    def __init__(self, capacity: int) -> None:
        if capacity <= 0:
            raise ValueError(f"arena capacity must be > 0, got {capacity}")
        self.capacity = capacity
        self.base = np.zeros(align_up(capacity), dtype=np.uint8)
        self.words = self.base.view(np.uint32)
        self._cursor = 0
        self._global_ops = 0
        self._lock = threading.Lock()

    @property
    def cursor(self) -> int:
        return self._cursor

    @property
    def global_ops(self) -> int:
        """Number of successful global-cursor operations"""
        return self._global_ops

    def grant_block(self, block_size: int) -> BlockGrant:
        """Advance the global cursor by one block.

        Args:
            block_size: Bytes to reserve

        Returns:
            Grant starting at the pre-advance cursor

        Raises:
            ArenaExhausted: When the block does not fit
        """
        if block_size <= 0:
            raise ValueError(f"block_size must be > 0, got {block_size}")
        with self._lock:
            offset = self._cursor
            if offset + block_size > self.capacity:
                raise ArenaExhausted(self.capacity, offset, block_size)
            self._cursor = offset + block_size
            self._global_ops += 1
        return BlockGrant(self, offset, block_size)

    def reset(self) -> None:
        """Start a new phase; previously granted memory becomes invalid"""
        with self._lock:
            self._cursor = 0
            self._global_ops = 0


def arena_new(capacity: int) -> Arena:
    """Create an arena of the given capacity"""
    return Arena(capacity)


@dataclass
class BlockGrant:
    """A block owned by one work group"""

    arena: Arena
    offset: int
    size: int
    local_cursor: int = 0

    @property
    def remaining(self) -> int:
        return self.size - self.local_cursor

    def local_alloc(self, nbytes: int) -> int:
        """Bump-allocate nbytes inside the block.

        Returns:
            Arena-relative byte offset

        Raises:
            BlockFull: When nbytes exceeds the remaining space
        """
        if nbytes <= 0:
            raise ValueError(f"nbytes must be > 0, got {nbytes}")
        if self.local_cursor + nbytes > self.size:
            raise BlockFull(self.size, self.local_cursor, nbytes)
        offset = self.offset + self.local_cursor
        self.local_cursor += nbytes
        return offset


@dataclass
class GroupAllocator:
    """Allocation front-end for one work group.

    With ``block_size=None`` every request goes to the global cursor with
    exactly the item size (the basic allocator).
    """

    arena: Arena
    block_size: Optional[int] = DEFAULT_BLOCK_SIZE
    grants: list[BlockGrant] = field(default_factory=list)
    requested_bytes: int = 0

    def alloc(self, nbytes: int) -> int:
        """Allocate an 8-byte aligned region and return its arena offset"""
        size = align_up(nbytes)
        self.requested_bytes += size
        if self.block_size is None:
            grant = self.arena.grant_block(size)
            self.grants.append(grant)
            return grant.local_alloc(size)

        if self.grants:
            current = self.grants[-1]
            if current.remaining >= size:
                return current.local_alloc(size)
        # Leader requests a new block; oversized requests get a dedicated one
        grant = self.arena.grant_block(max(self.block_size, size))
        self.grants.append(grant)
        return grant.local_alloc(size)

    @property
    def global_ops(self) -> int:
        return len(self.grants)


def estimate_grants(bytes_per_group: np.ndarray, block_size: Optional[int]) -> int:
    """Global-cursor operations needed to serve the given per-group byte totals.

    Args:
        bytes_per_group: Total allocated bytes per work group
        block_size: Block size, or None for the basic allocator (one op per item)

    Returns:
        Sum over groups of ceil(bytes / block_size)
    """
    totals = np.asarray(bytes_per_group, dtype=np.int64)
    if block_size is None:
        return int(np.count_nonzero(totals))
    return int(np.sum((totals + block_size - 1) // block_size))
