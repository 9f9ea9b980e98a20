"""Latch micro-benchmark: K threads perform X increments on N counters.

Each increment takes the latch of its slot. Slots are drawn uniformly or
with a share of duplicated draws (skew). Elapsed time is wall clock.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cojoin.utils.debuglog import log_event

DEFAULT_STRIPES = 4096
LOCK_HEADER = ("counters", "threads", "increments", "distribution", "total", "elapsed", "samples", "torn")

# Named distributions and their duplicate share
DISTRIBUTIONS: dict[str, int] = {"uniform": 0, "low-skew": 10, "high-skew": 25}


@dataclass
class LockBenchRow:
    """One (N, K, distribution) cell; elapsed is measured (wall clock)"""

    counters: int
    threads: int
    increments: int
    distribution: str
    total: int
    elapsed: float
    samples: int = 0
    torn: int = 0

    @property
    def conserved(self) -> bool:
        return self.total == self.increments and self.torn == 0

    def as_dict(self) -> dict[str, object]:
        return {name: getattr(self, name) for name in LOCK_HEADER}


def draw_slots(n: int, x: int, s_percent: int, seed: int) -> np.ndarray:
    """x slot indices in [0, n); s% of the draws repeat an earlier draw's slot"""
    rng = np.random.Generator(np.random.PCG64(seed))
    slots = rng.integers(0, n, size=x, dtype=np.int64)
    dups = x * s_percent // 100
    if dups and x > 1:
        where = rng.choice(x, size=dups, replace=False)
        partners = rng.integers(0, x, size=dups)
        slots[where] = slots[partners]
    return slots


class _SumChecker(threading.Thread):
    """Samples the counter total while workers run.

    Counters only grow, so successive samples must not decrease and must
    never exceed the number of increments.
    """

    def __init__(self, counters: list[int], limit: int, done: threading.Event) -> None:
        super().__init__(daemon=True)
        self.counters = counters
        self.limit = limit
        self.done = done
        self.samples = 0
        self.torn = 0

    def run(self) -> None:
        last = 0
        while not self.done.is_set():
            total = sum(self.counters)
            if total < last or total > self.limit:
                self.torn += 1
            last = max(last, total)
            self.samples += 1
            time.sleep(0)


def lockbench(
    n: int,
    k: int,
    x: int,
    distribution: str = "uniform",
    seed: int = 42,
    stripes: Optional[int] = None,
    check: bool = True,
) -> LockBenchRow:
    """Run one benchmark cell.

    Args:
        n: Number of counters
        k: Number of threads
        x: Total increments
        distribution: Key of DISTRIBUTIONS
        seed: Seed of the slot draws
        stripes: Lock count (at most n); each slot maps to stripe slot % stripes
        check: Run the racing sum checker

    Returns:
        Row with the counter total and wall-clock time
    """
    if n < 1 or k < 1 or x < 1:
        raise ValueError(f"N, K and X must be >= 1, got N={n}, K={k}, X={x}")
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"distribution must be one of {sorted(DISTRIBUTIONS)}, got '{distribution}'")
    slots = draw_slots(n, x, DISTRIBUTIONS[distribution], seed).tolist()
    locks = [threading.Lock() for _ in range(min(n, stripes or DEFAULT_STRIPES))]
    width = len(locks)
    counters = [0] * n

    def worker(t: int) -> None:
        for slot in slots[t::k]:
            with locks[slot % width]:
                counters[slot] += 1

    done = threading.Event()
    checker = _SumChecker(counters, x, done) if check else None
    if checker is not None:
        checker.start()
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=k) as pool:
        for future in [pool.submit(worker, t) for t in range(k)]:
            future.result()
    elapsed = time.perf_counter() - start
    done.set()
    if checker is not None:
        checker.join()

    row = LockBenchRow(
        counters=n,
        threads=k,
        increments=x,
        distribution=distribution,
        total=sum(counters),
        elapsed=elapsed,
        samples=checker.samples if checker else 0,
        torn=checker.torn if checker else 0,
    )
    log_event("lockbench", row.as_dict())
    return row


def lockbench_grid(
    sizes: list[int],
    k: int,
    x: int,
    distributions: Optional[list[str]] = None,
    seed: int = 42,
) -> list[LockBenchRow]:
    """One row per (N, distribution)"""
    return [lockbench(n, k, x, d, seed) for n in sizes for d in (distributions or list(DISTRIBUTIONS))]
