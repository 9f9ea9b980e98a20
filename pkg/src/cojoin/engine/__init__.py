"""Join engine - steps, device models, cost model and scheduling"""

from .costmodel import (
    CostEstimate,
    CostParams,
    SeriesModel,
    comp_time,
    intermediate_items,
    mem_time,
    pipe_delay,
    predict,
)
from .device import (
    COUPLED,
    DeviceKind,
    DeviceProfile,
    LogicalClock,
    TransferLink,
    calibrate,
    canned_profiles,
    load_profile,
    save_profile,
    simulate_step,
    transfer_time,
)
from .scheduler import (
    ExecutionReport,
    PhaseReport,
    Plan,
    SeriesPlan,
    basic_unit,
    execute,
    grid,
    plan_join,
    run_join,
    search_dd,
    search_ol,
    search_pl,
)
from .steps import (
    JoinResult,
    PartitionSet,
    StepId,
    StepSeries,
    coarse_step_join,
    group_by_workload,
    phj_join,
    radix_partition,
    reference_join,
    run_step,
    shj_join,
)
from .workload import JoinWorkload, SeriesWorkload, build_join_workload

__all__ = [
    "CostEstimate",
    "CostParams",
    "SeriesModel",
    "comp_time",
    "intermediate_items",
    "mem_time",
    "pipe_delay",
    "predict",
    "COUPLED",
    "DeviceKind",
    "DeviceProfile",
    "LogicalClock",
    "TransferLink",
    "calibrate",
    "canned_profiles",
    "load_profile",
    "save_profile",
    "simulate_step",
    "transfer_time",
    "ExecutionReport",
    "PhaseReport",
    "Plan",
    "SeriesPlan",
    "basic_unit",
    "execute",
    "grid",
    "plan_join",
    "run_join",
    "search_dd",
    "search_ol",
    "search_pl",
    "JoinResult",
    "PartitionSet",
    "StepId",
    "StepSeries",
    "coarse_step_join",
    "group_by_workload",
    "phj_join",
    "radix_partition",
    "reference_join",
    "run_step",
    "shj_join",
    "JoinWorkload",
    "SeriesWorkload",
    "build_join_workload",
]
