"""Monte-Carlo validation of the cost model.

Each run draws a random grid ratio for every step, times the phases on
the logical timeline and records the model's prediction next to it. The
searched PL plan is timed the same way and placed in the distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cojoin.config.schema import Algorithm, EngineConfig, Scheme
from cojoin.engine.costmodel import SeriesModel
from cojoin.engine.device import DeviceProfile, canned_profiles
from cojoin.engine.scheduler import grid, search_series, series_params, timeline_options
from cojoin.engine.timeline import simulate_series
from cojoin.engine.workload import SeriesWorkload, build_join_workload
from cojoin.utils.debuglog import log_event

from .inputs import JoinInputs

ERROR_TOLERANCE = 0.15
SEARCHED_RUN = "searched"
CDF_HEADER = ("run", "ratios", "predicted", "measured", "rel_error", "cdf")


@dataclass
class MonteCarloRun:
    run: str
    ratios: dict[str, list[float]]
    predicted: float
    measured: float
    cdf: float = 0.0

    @property
    def rel_error(self) -> float:
        return abs(self.predicted - self.measured) / self.measured if self.measured else 0.0

    def as_dict(self) -> dict[str, object]:
        return {
            "run": self.run,
            "ratios": ";".join(f"{p}:" + " ".join(f"{v:g}" for v in r) for p, r in self.ratios.items()),
            "predicted": self.predicted,
            "measured": self.measured,
            "rel_error": self.rel_error,
            "cdf": self.cdf,
        }


@dataclass
class MonteCarloResult:
    """Runs sorted by measured time, and the searched plan's run"""

    runs: list[MonteCarloRun]
    searched: MonteCarloRun
    phases: list[str] = field(default_factory=list)

    @property
    def percentile(self) -> float:
        """Fraction of random runs strictly faster than the searched plan"""
        if not self.runs:
            return 0.0
        faster = sum(1 for r in self.runs if r.measured < self.searched.measured)
        return faster / len(self.runs)

    @property
    def within_tolerance(self) -> float:
        """Fraction of runs whose relative error is under ERROR_TOLERANCE"""
        if not self.runs:
            return 0.0
        return sum(1 for r in self.runs if r.rel_error < ERROR_TOLERANCE) / len(self.runs)

    def measured_quantile(self, q: float) -> float:
        return float(np.quantile([r.measured for r in self.runs], q))

    def rows(self) -> list[dict[str, object]]:
        """CDF rows followed by the searched plan as summary row"""
        self.searched.cdf = self.percentile
        return [r.as_dict() for r in self.runs] + [self.searched.as_dict()]


def _time_phases(
    phases: Sequence[SeriesWorkload],
    ratios: dict[str, list[float]],
    models: dict[str, SeriesModel],
    cpu: DeviceProfile,
    gpu: DeviceProfile,
    config: EngineConfig,
) -> tuple[float, float]:
    opts = timeline_options(config)
    measured = predicted = 0.0
    for w in phases:
        r = ratios[w.phase]
        measured += simulate_series(w, r, cpu, gpu, opts).time
        predicted += float(models[w.phase].evaluate(np.array([r]))[0])
    return predicted, measured


def montecarlo(
    inputs: JoinInputs,
    algorithm: Algorithm = Algorithm.SHJ,
    runs: int = 1000,
    phase: Optional[str] = None,
    config: Optional[EngineConfig] = None,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    seed: Optional[int] = None,
) -> MonteCarloResult:
    """Random ratio vectors against the searched plan.

    Args:
        inputs: Join inputs
        algorithm: Join algorithm
        runs: Number of random vectors
        phase: Restrict to one phase (e.g. "build"); all phases otherwise
        config: Engine configuration (delta sets the ratio grid)
        cpu: CPU-like profile
        gpu: GPU-like profile
        seed: RNG seed of the ratio draws (config.bench.seed by default)

    Returns:
        Sorted runs with their empirical CDF and the searched plan

    Raises:
        ValueError: runs < 1 or unknown phase
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    config = config or EngineConfig()
    if cpu is None or gpu is None:
        canned_cpu, canned_gpu = canned_profiles()
        cpu, gpu = cpu or canned_cpu, gpu or canned_gpu
    R, S = inputs.load()
    workload = build_join_workload(algorithm, R, S, config, devices=(cpu, gpu))
    if phase is not None:
        if phase not in workload.names:
            raise ValueError(f"unknown phase '{phase}', expected one of {workload.names}")
        phases = [workload.phase(phase)]
    else:
        phases = list(workload.phases)
    models = {w.phase: SeriesModel(series_params(w, cpu, gpu, config)) for w in phases}

    g = grid(config.scheduler.delta)
    rng = np.random.Generator(np.random.PCG64(config.bench.seed if seed is None else seed))
    drawn = []
    for i in range(runs):
        ratios = {w.phase: [float(v) for v in rng.choice(g, size=len(w.steps))] for w in phases}
        predicted, measured = _time_phases(phases, ratios, models, cpu, gpu, config)
        drawn.append(MonteCarloRun(str(i), ratios, predicted, measured))
    drawn.sort(key=lambda r: r.measured)
    for i, r in enumerate(drawn):
        r.cdf = (i + 1) / runs

    searched_ratios = {w.phase: search_series(Scheme.PL, w, cpu, gpu, config).ratios for w in phases}
    predicted, measured = _time_phases(phases, searched_ratios, models, cpu, gpu, config)
    result = MonteCarloResult(drawn, MonteCarloRun(SEARCHED_RUN, searched_ratios, predicted, measured), [w.phase for w in phases])
    log_event(
        "montecarlo",
        {
            "runs": runs,
            "phases": result.phases,
            "percentile": result.percentile,
            "within_tolerance": result.within_tolerance,
        },
    )
    return result
