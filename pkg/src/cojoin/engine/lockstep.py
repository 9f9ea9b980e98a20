"""Wavefront arithmetic shared by the simulator, the cost model and grouping"""

from __future__ import annotations

import numpy as np


def _as_costs(costs: np.ndarray) -> np.ndarray:
    arr = np.asarray(costs, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("costs must be a 1-D array")
    return arr


def wavefront_starts(n: int, width: int) -> np.ndarray:
    if width < 1:
        raise ValueError(f"wavefront width must be >= 1, got {width}")
    return np.arange(0, n, width, dtype=np.int64)


def wavefront_maxima(costs: np.ndarray, width: int) -> np.ndarray:
    """Maximum cost of each wavefront, wavefronts formed in input order"""
    arr = _as_costs(costs)
    if arr.size == 0:
        return np.empty(0, dtype=np.float64)
    return np.maximum.reduceat(arr, wavefront_starts(arr.size, width))


def wavefront_lengths(n: int, width: int) -> np.ndarray:
    starts = wavefront_starts(n, width)
    return np.minimum(starts + width, n) - starts


def divergence(costs: np.ndarray, width: int) -> float:
    """Sum over wavefronts of (max - mean) item cost"""
    arr = _as_costs(costs)
    if arr.size == 0:
        return 0.0
    starts = wavefront_starts(arr.size, width)
    maxima = np.maximum.reduceat(arr, starts)
    means = np.add.reduceat(arr, starts) / wavefront_lengths(arr.size, width)
    return float(np.sum(maxima - means))


def lockstep_units(units: np.ndarray, width: int) -> float:
    """Effective units per item when every item waits for its wavefront's maximum"""
    arr = _as_costs(units)
    if arr.size == 0:
        return 0.0
    maxima = wavefront_maxima(arr, width)
    return float(np.dot(maxima, wavefront_lengths(arr.size, width)) / arr.size)


def segment_lockstep(costs: np.ndarray, seg_starts: np.ndarray, width: int) -> np.ndarray:
    """Per-segment sum of wavefront maxima, wavefronts aligned to segment starts.

    Args:
        costs: Per-item lane costs
        seg_starts: Ascending segment start offsets, first one 0
        width: Wavefront width

    Returns:
        Array with one entry per segment
    """
    arr = _as_costs(costs)
    starts = np.asarray(seg_starts, dtype=np.int64)
    if arr.size == 0:
        return np.zeros(starts.size, dtype=np.float64)
    idx = np.arange(arr.size, dtype=np.int64)
    seg = np.searchsorted(starts, idx, side="right") - 1
    pos = idx - starts[seg]
    wf = np.flatnonzero(pos % width == 0)
    maxima = np.maximum.reduceat(arr, wf)
    return np.bincount(seg[wf], weights=maxima, minlength=starts.size)
