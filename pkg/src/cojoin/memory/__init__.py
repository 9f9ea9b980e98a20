"""Arena allocation and hash tables"""

from .allocator import (
    ALIGNMENT,
    DEFAULT_BLOCK_SIZE,
    Arena,
    BlockGrant,
    GroupAllocator,
    align_up,
    arena_new,
    estimate_grants,
)
from .hashtable import (
    KEY_NODE_BYTES,
    NONE,
    RID_NODE_BYTES,
    HashTable,
    MergeStats,
    bucket_index,
    murmur2,
    murmur2_array,
    next_pow2,
)

__all__ = [
    "ALIGNMENT",
    "DEFAULT_BLOCK_SIZE",
    "Arena",
    "BlockGrant",
    "GroupAllocator",
    "align_up",
    "arena_new",
    "estimate_grants",
    "KEY_NODE_BYTES",
    "NONE",
    "RID_NODE_BYTES",
    "HashTable",
    "MergeStats",
    "bucket_index",
    "murmur2",
    "murmur2_array",
    "next_pow2",
]
