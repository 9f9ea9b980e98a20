"""Experiment harness - sweeps, Monte-Carlo validation, lock and large-join benchmarks"""

from .inputs import JoinInputs
from .largejoin import LargeJoinReport, choose_partition_bits, largejoin, linear_fit, pair_bytes
from .lockbench import DISTRIBUTIONS, LockBenchRow, lockbench, lockbench_grid
from .montecarlo import MonteCarloResult, MonteCarloRun, montecarlo
from .report import ResultRow, mark_argmin, print_result_rows, read_csv, write_csv, write_rows
from .sweep import SweepAxis, sweep

__all__ = [
    "JoinInputs",
    "LargeJoinReport",
    "choose_partition_bits",
    "largejoin",
    "linear_fit",
    "pair_bytes",
    "DISTRIBUTIONS",
    "LockBenchRow",
    "lockbench",
    "lockbench_grid",
    "MonteCarloResult",
    "MonteCarloRun",
    "montecarlo",
    "ResultRow",
    "mark_argmin",
    "print_result_rows",
    "read_csv",
    "write_csv",
    "write_rows",
    "SweepAxis",
    "sweep",
]
