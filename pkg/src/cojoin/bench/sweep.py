"""Parameter sweeps over one axis of a join experiment.

Every point is planned and timed on the logical timeline; the semantic
threaded run is skipped, so result counts come from the static workload.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

from cojoin.config.schema import Algorithm, EngineConfig, Scheme
from cojoin.engine.device import DeviceProfile, canned_profiles
from cojoin.engine.scheduler import Plan, execute, grid, run_join
from cojoin.engine.workload import build_join_workload
from cojoin.utils.debuglog import log_event

from .inputs import JoinInputs
from .report import ResultRow, mark_argmin

DEFAULT_BLOCK_SIZES = [64 << k for k in range(8)]  # 64 B .. 8 KiB
DEFAULT_SELECTIVITIES = [0.125, 0.25, 0.5, 1.0]
DEFAULT_GROUPS = [1, 2, 4, 8, 16, 32]


class SweepAxis(str, Enum):
    """Swept parameter"""

    RATIO = "ratio"
    BLOCK_SIZE = "block_size"
    SELECTIVITY = "selectivity"
    BUILD_SIZE = "build_size"
    GROUPS = "groups"


def default_values(axis: SweepAxis, inputs: JoinInputs, config: EngineConfig) -> list[float]:
    """Grid of an axis when none is given"""
    if axis is SweepAxis.RATIO:
        return [float(v) for v in grid(config.scheduler.delta)]
    if axis is SweepAxis.BLOCK_SIZE:
        return [float(v) for v in DEFAULT_BLOCK_SIZES]
    if axis is SweepAxis.SELECTIVITY:
        return list(DEFAULT_SELECTIVITIES)
    if axis is SweepAxis.GROUPS:
        return [float(v) for v in DEFAULT_GROUPS]
    # Build sizes double from 1/8 of the probe size up to the probe size
    top = max(inputs.s_size, 8)
    return [float(top >> k) for k in range(3, -1, -1)]


def sweep(
    axis: SweepAxis,
    inputs: JoinInputs,
    algorithm: Algorithm = Algorithm.SHJ,
    scheme: Scheme = Scheme.PL,
    config: Optional[EngineConfig] = None,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    values: Optional[Sequence[float]] = None,
) -> list[ResultRow]:
    """Run one experiment per value of an axis.

    The ratio axis fixes every step of every phase to the same CPU share
    and ignores ``scheme``. The other axes plan each point with ``scheme``.

    Args:
        axis: Swept parameter
        inputs: Base inputs (sizes, selectivity, seed)
        algorithm: Join algorithm
        scheme: Scheme for non-ratio axes
        config: Engine configuration
        cpu: CPU-like profile
        gpu: GPU-like profile
        values: Axis values (defaults per axis)

    Returns:
        One row per value with the argmin row marked
    """
    config = config or EngineConfig()
    if cpu is None or gpu is None:
        canned_cpu, canned_gpu = canned_profiles()
        cpu, gpu = cpu or canned_cpu, gpu or canned_gpu
    points = list(values) if values is not None else default_values(axis, inputs, config)
    if not points:
        raise ValueError("sweep needs at least one axis value")
    if axis is SweepAxis.RATIO:
        rows = _ratio_sweep(points, inputs, algorithm, config, cpu, gpu)
    else:
        rows = []
        base = inputs.load() if axis in (SweepAxis.BLOCK_SIZE, SweepAxis.GROUPS) else None
        for v in points:
            cfg = config.model_copy(deep=True)
            point = inputs
            if axis is SweepAxis.BLOCK_SIZE:
                cfg.allocator.block_size = int(v)
            elif axis is SweepAxis.GROUPS:
                cfg.scheduler.groups = int(v)
            elif axis is SweepAxis.SELECTIVITY:
                point = inputs.with_selectivity(float(v))
            else:
                point = inputs.with_sizes(r_size=int(v))
            R, S = base if base is not None else point.load()
            report = run_join(algorithm, scheme, R, S, cfg, cpu, gpu, semantic=False)
            rows.append(ResultRow.from_report(f"sweep-{axis.value}", report, len(R), len(S), cfg, _label(axis, v)))
    best = mark_argmin(rows)
    log_event("sweep", {"axis": axis.value, "points": len(rows), "argmin": best})
    return rows


def _ratio_sweep(
    points: Sequence[float],
    inputs: JoinInputs,
    algorithm: Algorithm,
    config: EngineConfig,
    cpu: DeviceProfile,
    gpu: DeviceProfile,
) -> list[ResultRow]:
    R, S = inputs.load()
    workload = build_join_workload(algorithm, R, S, config, devices=(cpu, gpu))
    rows = []
    for r in points:
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"ratio values must lie in [0, 1], got {r}")
        ratios = {w.phase: [float(r)] * len(w.steps) for w in workload.phases}
        plan = Plan(
            Scheme.DD,
            algorithm,
            ratios=ratios,
            table_mode=config.table_mode,
            architecture=config.architecture,
        )
        report = execute(plan, R, S, config, cpu, gpu, workload, semantic=False)
        rows.append(ResultRow.from_report("sweep-ratio", report, len(R), len(S), config, _label(SweepAxis.RATIO, r)))
    return rows


def _label(axis: SweepAxis, value: float) -> str:
    if axis in (SweepAxis.RATIO, SweepAxis.SELECTIVITY):
        return f"{axis.value}={value:g}"
    return f"{axis.value}={int(value)}"
