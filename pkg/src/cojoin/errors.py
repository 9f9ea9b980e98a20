"""Exception hierarchy for the join engine"""

from __future__ import annotations


class CojoinError(Exception):
    """Base exception for engine errors with detailed information"""

    def __init__(self, message: str, error_type: str, suggestion: str = ""):
        super().__init__(message)
        self.error_type = error_type
        self.suggestion = suggestion


class ArenaExhausted(CojoinError):
    """Raised when a block grant would move the global cursor past capacity"""

    def __init__(self, capacity: int, cursor: int, requested: int):
        message = (
            f"ARENA EXHAUSTED: requested {requested} bytes at cursor {cursor} "
            f"of a {capacity}-byte arena"
        )
        suggestion = "Increase allocator.arena_bytes or use a smaller input"
        super().__init__(message, "arena_exhausted", suggestion)
        self.capacity = capacity
        self.cursor = cursor
        self.requested = requested


class BlockFull(CojoinError):
    """Raised when a local allocation does not fit the remaining block space"""

    def __init__(self, size: int, local_cursor: int, requested: int):
        message = f"BLOCK FULL: {requested} bytes requested, {size - local_cursor} left"
        super().__init__(message, "block_full", "Request a new block grant")
        self.size = size
        self.local_cursor = local_cursor
        self.requested = requested


class RelationFormatError(CojoinError):
    """Raised when a relation file has a malformed header"""

    def __init__(self, path: str, reason: str):
        super().__init__(
            f"Malformed relation file {path}: {reason}",
            "relation_format",
            "Regenerate the file with `cojoin gen`",
        )
        self.path = path


class LengthMismatchError(RelationFormatError):
    """Raised when a relation file is shorter or longer than its header says"""

    def __init__(self, path: str, expected: int, actual: int):
        super().__init__(path, f"expected {expected} bytes, found {actual}")
        self.error_type = "length_mismatch"
        self.expected = expected
        self.actual = actual


class CalibrationError(CojoinError):
    """Raised when a calibration sample cannot produce a stable median"""

    def __init__(self, message: str):
        super().__init__(message, "calibration", "Use a sample with more tuples")


class MissingCalibrationError(CojoinError):
    """Raised when a device profile has no cost entry for a step"""

    def __init__(self, device: str, step: str):
        super().__init__(
            f"Profile '{device}' has no cost entry for step {step}",
            "missing_calibration",
            f"Run `cojoin calibrate --step {step}` or add the key to the profile file",
        )
        self.device = device
        self.step = step


class HandoffDeadlock(CojoinError):
    """Raised when a producer cannot enqueue intermediate items in time"""

    def __init__(self, phase: str, step: str, capacity: int):
        super().__init__(
            f"Handoff queue for {phase}/{step} stayed full (capacity {capacity} blocks)",
            "handoff_deadlock",
            "Increase --handoff-cap",
        )
        self.phase = phase
        self.step = step
        self.capacity = capacity


class PlanError(CojoinError):
    """Raised when a plan does not fit the step series it is applied to"""

    def __init__(self, message: str):
        super().__init__(message, "plan", "Re-run plan search or fix the plan file")


class BufferOverflowError(CojoinError):
    """Raised when a partition pair still exceeds the buffer after all passes"""

    def __init__(self, pair_bytes: int, buffer_limit: int, passes: int):
        super().__init__(
            f"Partition pair of {pair_bytes} bytes exceeds the {buffer_limit}-byte buffer "
            f"after {passes} pass(es)",
            "buffer_overflow",
            "Increase --passes or --pass-bits",
        )
        self.pair_bytes = pair_bytes
        self.buffer_limit = buffer_limit
        self.passes = passes
