"""Plan search and execution of co-processed joins.

A plan fixes, for every step series of a join, the CPU share of every
step. Searches evaluate candidate ratio vectors with the cost model; an
executed plan is timed on the logical timeline and run for real on two
threads to produce the join result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from cojoin.config.schema import Algorithm, Architecture, EngineConfig, Scheme, TableMode
from cojoin.data.relation import Relation
from cojoin.errors import PlanError
from cojoin.memory.hashtable import table_bytes
from cojoin.utils.debuglog import log_event

from .costmodel import CostEstimate, CostParams, ModelState, SeriesModel, predict
from .device import DeviceProfile, TransferLink, canned_profiles, transfer_time
from .steps import JoinResult, StepId, block_or_basic
from .timeline import (
    CPU,
    GPU,
    DeviceTiming,
    SeriesTiming,
    TimelineOptions,
    simulate_basic_unit,
    simulate_series,
    splits_of,
)
from .workload import JoinWorkload, SeriesWorkload, build_join_workload

MERGE_PHASE = "merge"
PRUNE_TOLERANCE = 1e-9


def grid(delta: float) -> np.ndarray:
    """Ratio grid k * delta for k = 0..floor(1/delta), closed with 1.0"""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    k = int(math.floor(1.0 / delta + 1e-9))
    points = [min(1.0, round(i * delta, 12)) for i in range(k + 1)]
    if points[-1] < 1.0 - 1e-12:
        points.append(1.0)
    else:
        points[-1] = 1.0
    return np.array(points, dtype=np.float64)


def link_of(config: EngineConfig) -> Optional[TransferLink]:
    if config.architecture is not Architecture.DISCRETE:
        return None
    return TransferLink(latency=config.link.latency, bandwidth=config.link.bandwidth)


def timeline_options(config: EngineConfig) -> TimelineOptions:
    return TimelineOptions(
        dispatch_items=config.scheduler.dispatch_items,
        max_chunks=config.scheduler.max_chunks,
        block_size=block_or_basic(config.allocator.block_size),
        link=link_of(config),
    )


# Plans


@dataclass
class SeriesPlan:
    """Searched ratios of one step series"""

    phase: str
    ratios: list[float]
    predicted: float
    evaluated: int = 0
    budget_exceeded: bool = False


@dataclass
class Plan:
    """Per-phase CPU shares of a whole join"""

    scheme: Scheme
    algorithm: Algorithm = Algorithm.SHJ
    ratios: dict[str, list[float]] = field(default_factory=dict)
    table_mode: TableMode = TableMode.SHARED
    architecture: Architecture = Architecture.COUPLED
    chunk_size: Optional[int] = None
    predicted: dict[str, float] = field(default_factory=dict)
    budget_exceeded: bool = False

    def __post_init__(self) -> None:
        self.check()

    def check(self) -> None:
        """Raise PlanError when the ratios break the scheme's shape"""
        if self.scheme is Scheme.BASIC_UNIT:
            if self.chunk_size is None or self.chunk_size < 1:
                raise PlanError("basicunit plans need a chunk_size >= 1")
        elif self.chunk_size is not None:
            raise PlanError("chunk_size is only valid with the basicunit scheme")
        for phase, r in self.ratios.items():
            if any(not 0.0 <= v <= 1.0 for v in r):
                raise PlanError(f"ratios of phase '{phase}' must lie in [0, 1]")
            if self.scheme is Scheme.CPU and any(v != 1.0 for v in r):
                raise PlanError(f"cpu plan has a GPU share in phase '{phase}'")
            if self.scheme is Scheme.GPU and any(v != 0.0 for v in r):
                raise PlanError(f"gpu plan has a CPU share in phase '{phase}'")
            if self.scheme is Scheme.OL and any(v not in (0.0, 1.0) for v in r):
                raise PlanError(f"off-loading ratios must be 0 or 1 in phase '{phase}'")
            if self.scheme is Scheme.DD and len(set(r)) > 1:
                raise PlanError(f"data-dividing ratios must be constant in phase '{phase}'")

    def check_against(self, workload: JoinWorkload) -> None:
        if self.scheme is Scheme.BASIC_UNIT:
            return
        expected = {w.phase: len(w.steps) for w in workload.phases}
        got = {phase: len(r) for phase, r in self.ratios.items()}
        if expected != got:
            raise PlanError(f"plan phases {got} do not match the join's series {expected}")

    @property
    def total_predicted(self) -> float:
        return sum(self.predicted.values())

    def to_text(self) -> str:
        lines = [
            f"scheme={self.scheme.value}",
            f"algorithm={self.algorithm.value}",
            f"table_mode={self.table_mode.value}",
            f"architecture={self.architecture.value}",
        ]
        if self.chunk_size is not None:
            lines.append(f"chunk_size={self.chunk_size}")
        for phase, r in self.ratios.items():
            lines.append(f"ratios.{phase}=" + " ".join(repr(float(v)) for v in r))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Plan:
        """Parse the flat key=value form written by to_text"""
        values: dict[str, str] = {}
        ratios: dict[str, list[float]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise PlanError(f"line {lineno}: expected key=value, got '{line}'")
            key, value = key.strip(), value.strip()
            if key.startswith("ratios."):
                try:
                    ratios[key[len("ratios.") :]] = [float(v) for v in value.split()]
                except ValueError:
                    raise PlanError(f"line {lineno}: ratios must be numbers") from None
            else:
                values[key] = value
        if "scheme" not in values:
            raise PlanError("plan has no scheme")
        try:
            return cls(
                scheme=Scheme(values["scheme"]),
                algorithm=Algorithm(values.get("algorithm", Algorithm.SHJ.value)),
                ratios=ratios,
                table_mode=TableMode(values.get("table_mode", TableMode.SHARED.value)),
                architecture=Architecture(values.get("architecture", Architecture.COUPLED.value)),
                chunk_size=int(values["chunk_size"]) if "chunk_size" in values else None,
            )
        except ValueError as e:
            raise PlanError(str(e)) from None

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> Plan:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


# Searches


def _pick(T: np.ndarray, prefer_last: bool = False) -> int:
    best = np.flatnonzero(T == T.min())
    return int(best[-1] if prefer_last else best[0])


def search_dd(params: CostParams, delta: float, phase: str = "") -> SeriesPlan:
    """One ratio for every step of the series; ties go to the larger CPU share"""
    g = grid(delta)
    model = SeriesModel(params)
    T = model.evaluate(np.repeat(g[:, None], params.n, axis=1))
    k = _pick(T, prefer_last=True)
    return SeriesPlan(phase, [float(g[k])] * params.n, float(T[k]), evaluated=g.size)


def search_ol(params: CostParams, phase: str = "") -> SeriesPlan:
    """Whole steps on one device.

    Coupled: every step goes to its cheaper device. Discrete: all 2^n
    assignments are enumerated, transfers included.
    """
    model = SeriesModel(params)
    if not params.discrete:
        r = []
        for i in range(params.n):
            x = float(params.x[i])
            cpu = (model.comp_cpu[i] + model.mem_cpu[i]) * x
            gpu = (model.comp_gpu[i] + model.mem_gpu[i]) * x
            r.append(1.0 if cpu < gpu else 0.0)
        T = model.evaluate(np.array([r]))
        return SeriesPlan(phase, r, float(T[0]), evaluated=params.n)
    R = np.array(list(itertools.product((0.0, 1.0), repeat=params.n)), dtype=np.float64)
    T = model.evaluate(R)
    k = _pick(T)
    return SeriesPlan(phase, [float(v) for v in R[k]], float(T[k]), evaluated=R.shape[0])


def _rest_bound(model: SeriesModel, i: int, s_cpu: np.ndarray, s_gpu: np.ndarray) -> np.ndarray:
    """Lower bound on the series time after step i.

    Steps i+1.. are split fractionally between the devices without delays
    or transfers; greedy assignment by relative CPU cost gives the best
    split, and the bound is its balance point.
    """
    p = model.params
    rest = range(i + 1, p.n)
    if not rest:
        return np.maximum(s_cpu, s_gpu)
    c = np.array([(model.comp_cpu[j] + model.mem_cpu[j]) * p.x[j] for j in rest])
    g = np.array([(model.comp_gpu[j] + model.mem_gpu[j]) * p.x[j] for j in rest])
    total = c + g
    key = np.divide(c, total, out=np.zeros_like(c), where=total > 0)
    order = np.argsort(key, kind="stable")
    c, g = c[order], g[order]
    c_cum = np.concatenate([[0.0], np.cumsum(c)])
    g_rem = np.concatenate([np.cumsum(g[::-1])[::-1], [0.0]])
    diff = (s_cpu[:, None] + c_cum[None, :]) - (s_gpu[:, None] + g_rem[None, :])
    crossing = (diff < 0).sum(axis=1)
    K = c.size
    inner = np.clip(crossing - 1, 0, K - 1)
    denom = c[inner] + g[inner]
    d_at = diff[np.arange(diff.shape[0]), inner]
    frac = np.divide(-d_at, denom, out=np.zeros_like(d_at), where=denom > 0)
    balanced = s_cpu + c_cum[inner] + frac * c[inner]
    bound = np.where(crossing == 0, s_cpu, np.where(crossing == K + 1, s_gpu, balanced))
    return np.maximum(bound, np.maximum(s_cpu, s_gpu))


def search_pl(
    params: CostParams,
    delta: float,
    phase: str = "",
    budget: int = 20_000_000,
    exhaustive: bool = False,
    incumbent: Optional[SeriesPlan] = None,
) -> SeriesPlan:
    """Best ratio vector on the full grid.

    Candidates are expanded one step at a time in lexicographic grid order.
    Unless exhaustive, a prefix is dropped when its lower bound exceeds the
    incumbent. When the budget would be exceeded, only the prefixes with
    the smallest bounds are kept and the result is flagged.
    """
    g = grid(delta)
    k = g.size
    model = SeriesModel(params)
    ub = incumbent.predicted if incumbent is not None else math.inf
    limit = ub * (1.0 + PRUNE_TOLERANCE) if math.isfinite(ub) else math.inf
    prefixes = np.zeros((1, 0), dtype=np.int16)
    state = ModelState.initial(1)
    evaluated = 0
    exceeded = False
    final = np.empty(0)

    for i in range(params.n):
        m = prefixes.shape[0]
        room = budget - evaluated
        if m * k > room:
            exceeded = True
            keep = max(1, room // k)
            if keep < m:
                lb = _rest_bound(model, i - 1, state.s_cpu, state.s_gpu)
                chosen = np.sort(np.argsort(lb, kind="stable")[:keep])
                prefixes, state = prefixes[chosen], state.take(chosen)
                m = keep
        parent = np.repeat(np.arange(m), k)
        idx = np.tile(np.arange(k, dtype=np.int16), m)
        state, _ = model.advance(i, state.take(parent), g[idx])
        prefixes = np.hstack([prefixes[parent], idx[:, None]])
        evaluated += m * k
        if i == params.n - 1:
            final = state.bound
        elif not exhaustive:
            alive = _rest_bound(model, i, state.s_cpu, state.s_gpu) <= limit
            if not alive.any():
                break
            prefixes, state = prefixes[alive], state.take(np.flatnonzero(alive))

    if final.size:
        j = _pick(final)
        best = SeriesPlan(phase, [float(g[v]) for v in prefixes[j]], float(final[j]), evaluated, exceeded)
    else:
        best = SeriesPlan(phase, [], math.inf, evaluated, exceeded)
    if incumbent is not None and (not best.ratios or incumbent.predicted < best.predicted):
        return SeriesPlan(phase, list(incumbent.ratios), incumbent.predicted, evaluated, exceeded)
    return best


def series_params(
    workload: SeriesWorkload, cpu: DeviceProfile, gpu: DeviceProfile, config: EngineConfig
) -> CostParams:
    return CostParams.from_workload(workload, cpu, gpu, link=link_of(config))


def search_series(
    scheme: Scheme,
    workload: SeriesWorkload,
    cpu: DeviceProfile,
    gpu: DeviceProfile,
    config: EngineConfig,
) -> SeriesPlan:
    """Ratios of one series under a scheme"""
    params = series_params(workload, cpu, gpu, config)
    phase = workload.phase
    n = params.n
    if params.n == 0 or workload.x == 0:
        fixed = 0.0 if scheme is Scheme.GPU else 1.0
        return SeriesPlan(phase, [fixed] * n, 0.0)
    if scheme is Scheme.CPU:
        r = [1.0] * n
        return SeriesPlan(phase, r, float(SeriesModel(params).evaluate(np.array([r]))[0]), 1)
    if scheme is Scheme.GPU:
        r = [0.0] * n
        return SeriesPlan(phase, r, float(SeriesModel(params).evaluate(np.array([r]))[0]), 1)
    sched = config.scheduler
    if scheme is Scheme.DD:
        return search_dd(params, sched.delta, phase)
    if scheme is Scheme.OL:
        return search_ol(params, phase)
    if scheme in (Scheme.PL, Scheme.COARSE_PL):
        dd = search_dd(params, sched.delta, phase)
        ol = search_ol(params, phase)
        seed = dd if dd.predicted <= ol.predicted else ol
        return search_pl(params, sched.delta, phase, sched.pl_budget, sched.exhaustive, seed)
    raise PlanError(f"scheme {scheme.value} has no ratio search")


def plan_join(
    scheme: Scheme,
    workload: JoinWorkload,
    cpu: DeviceProfile,
    gpu: DeviceProfile,
    config: EngineConfig,
    chunk_size: Optional[int] = None,
) -> Plan:
    """Search the ratios of every phase of a join"""
    if scheme is Scheme.BASIC_UNIT:
        return Plan(
            scheme,
            workload.algorithm,
            table_mode=config.table_mode,
            architecture=config.architecture,
            chunk_size=chunk_size or config.scheduler.chunk_size,
        )
    if scheme is Scheme.COARSE_PL and not workload.coarse:
        raise PlanError("coarsepl needs a join workload with partition-pair steps")
    plan = Plan(scheme, workload.algorithm, table_mode=config.table_mode, architecture=config.architecture)
    for w in workload.phases:
        found = search_series(scheme, w, cpu, gpu, config)
        plan.ratios[w.phase] = found.ratios
        plan.predicted[w.phase] = found.predicted
        plan.budget_exceeded |= found.budget_exceeded
        log_event(
            "plan_search",
            {
                "scheme": scheme.value,
                "phase": w.phase,
                "ratios": found.ratios,
                "predicted": found.predicted,
                "evaluated": found.evaluated,
                "budget_exceeded": found.budget_exceeded,
            },
        )
    plan.check()
    return plan


def plan_config(config: EngineConfig, plan: Plan) -> EngineConfig:
    """Copy of config with the table mode and architecture a plan was made for"""
    if config.table_mode is plan.table_mode and config.architecture is plan.architecture:
        return config
    config = config.model_copy(deep=True)
    config.table_mode = plan.table_mode
    config.architecture = plan.architecture
    return config


def predict_plan(
    plan: Plan, workload: JoinWorkload, cpu: DeviceProfile, gpu: DeviceProfile, config: EngineConfig
) -> dict[str, CostEstimate]:
    """Cost-model estimate of every phase under a ratio plan"""
    plan.check_against(workload)
    config = plan_config(config, plan)
    if plan.scheme is Scheme.BASIC_UNIT:
        raise PlanError("basicunit plans have no ratio vector to estimate")
    return {
        w.phase: predict(series_params(w, cpu, gpu, config), plan.ratios[w.phase]) for w in workload.phases
    }


# Execution


@dataclass
class PhaseReport:
    """Timing of one executed phase"""

    phase: str
    timing: SeriesTiming
    predicted: float
    ratios: list[float] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.timing.time

    @property
    def transfer(self) -> float:
        return self.timing.transfer

    @property
    def stall(self) -> float:
        return self.timing.stall


@dataclass
class ExecutionReport:
    """Logical timing breakdown and result of an executed plan"""

    plan: Plan
    phases: list[PhaseReport]
    result: Optional[JoinResult] = None
    arena_ops: int = 0
    merged_key_nodes: int = 0
    matches: int = 0

    @property
    def algorithm(self) -> Algorithm:
        return self.plan.algorithm

    def phase(self, name: str) -> PhaseReport:
        for p in self.phases:
            if p.phase == name:
                return p
        raise KeyError(name)

    def _sum(self, prefix: str) -> float:
        return sum(p.time for p in self.phases if p.phase.startswith(prefix))

    @property
    def partition_time(self) -> float:
        return self._sum("partition_")

    @property
    def build_time(self) -> float:
        return self._sum("build")

    @property
    def probe_time(self) -> float:
        return self._sum("probe")

    @property
    def join_time(self) -> float:
        return self._sum("join")

    @property
    def merge_time(self) -> float:
        return self._sum(MERGE_PHASE)

    @property
    def measured(self) -> float:
        return sum(p.time for p in self.phases)

    @property
    def predicted(self) -> float:
        return sum(p.predicted for p in self.phases)

    @property
    def transfer(self) -> float:
        return sum(p.transfer for p in self.phases)

    @property
    def stall(self) -> float:
        return sum(p.stall for p in self.phases)

    @property
    def gpu_time(self) -> float:
        return sum(p.timing.gpu.total for p in self.phases)

    @property
    def global_ops(self) -> int:
        return sum(p.timing.global_ops for p in self.phases)

    @property
    def realized_ratio(self) -> float:
        cpu = sum(p.timing.cpu.items for p in self.phases)
        gpu = sum(p.timing.gpu.items for p in self.phases)
        return cpu / (cpu + gpu) if cpu + gpu else 0.0

    @property
    def relative_error(self) -> float:
        return abs(self.predicted - self.measured) / self.measured if self.measured else 0.0

    @property
    def lock_overhead(self) -> float:
        """Measured minus predicted time"""
        return self.measured - self.predicted

    @property
    def result_count(self) -> int:
        """Result pairs, or the statically counted matches when the join was only timed"""
        if self.result is None:
            return self.matches
        return len(self.result)

    def step_times(self) -> dict[str, float]:
        """Busy time per device and step label over all phases"""
        out: dict[str, float] = {}
        for p in self.phases:
            for dev, timing in ((CPU, p.timing.cpu), (GPU, p.timing.gpu)):
                for label, t in timing.steps.items():
                    key = f"{dev}.{label}"
                    out[key] = out.get(key, 0.0) + t
        return out


def _gpu_build_mask(plan: Plan, build: SeriesWorkload, owner: Optional[np.ndarray], chunk: int) -> np.ndarray:
    """Build items whose key nodes land in the GPU's table"""
    x = build.x
    mask = np.zeros(x, dtype=bool)
    if plan.scheme is Scheme.BASIC_UNIT:
        assert owner is not None
        mask = np.repeat(owner == 1, chunk)[:x]
    else:
        b3 = build.steps.index(StepId.B3)
        a = splits_of(plan.ratios[build.phase], x)[b3]
        mask[a:] = True
    return mask


def merge_phase(
    plan: Plan,
    workload: JoinWorkload,
    cpu: DeviceProfile,
    link: Optional[TransferLink],
    owner: Optional[np.ndarray] = None,
) -> PhaseReport:
    """CPU merge of the GPU's partial table, after its download in discrete mode"""
    build = next(w for w in workload.phases if w.phase == "build")
    chunk = plan.chunk_size or 1
    mask = _gpu_build_mask(plan, build, owner, chunk)
    keys = workload.build_keys[mask]
    nodes = int(np.unique(keys).size)
    merge = nodes * cpu.merge_cost_per_node
    download = transfer_time(link, table_bytes(int(mask.sum()), nodes)) if nodes else 0.0
    cpu_timing = DeviceTiming(steps={MERGE_PHASE: merge}, stall=download)
    gpu_timing = DeviceTiming(transfer=download)
    timing = SeriesTiming(MERGE_PHASE, cpu_timing, gpu_timing)
    return PhaseReport(MERGE_PHASE, timing, predicted=timing.time)


def execute(
    plan: Plan,
    R: Relation,
    S: Relation,
    config: EngineConfig,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    workload: Optional[JoinWorkload] = None,
    semantic: bool = True,
) -> ExecutionReport:
    """Run a plan: logical timing of every phase, then the threaded join.

    Args:
        plan: Plan to execute
        R: Build relation
        S: Probe relation
        config: Engine configuration (table mode and architecture come from the plan)
        cpu: CPU-like profile (canned when omitted)
        gpu: GPU-like profile (canned when omitted)
        workload: Precomputed workload of the same join
        semantic: Also compute the join result on the executor threads

    Returns:
        Report with per-phase timing and the join result

    Raises:
        PlanError: The plan does not fit the join
        ArenaExhausted: An arena was sized too small
        HandoffDeadlock: A handoff queue stayed full
    """
    if cpu is None or gpu is None:
        canned_cpu, canned_gpu = canned_profiles()
        cpu, gpu = cpu or canned_cpu, gpu or canned_gpu
    config = plan_config(config, plan)
    coarse = plan.scheme is Scheme.COARSE_PL
    if workload is None:
        workload = build_join_workload(plan.algorithm, R, S, config, coarse=coarse, devices=(cpu, gpu))
    plan.check_against(workload)
    opts = timeline_options(config)

    phases: list[PhaseReport] = []
    build_owner: Optional[np.ndarray] = None
    for w in workload.phases:
        params = series_params(w, cpu, gpu, config)
        model = SeriesModel(params)
        if plan.scheme is Scheme.BASIC_UNIT:
            assert plan.chunk_size is not None
            timing, owner = simulate_basic_unit(w, cpu, gpu, plan.chunk_size, opts)
            if w.phase == "build":
                build_owner = owner
            r = [timing.realized_ratio] * len(w.steps)
            predicted = float(model.evaluate(np.array([r]))[0]) if w.x else 0.0
        else:
            r = plan.ratios[w.phase]
            timing = simulate_series(w, r, cpu, gpu, opts)
            predicted = float(model.evaluate(np.array([r]))[0]) if w.x else 0.0
        phases.append(PhaseReport(w.phase, timing, predicted, list(r)))
        log_event(
            "phase",
            {
                "phase": w.phase,
                "time": timing.time,
                "predicted": predicted,
                "cpu": timing.cpu.total,
                "gpu": timing.gpu.total,
                "stall": timing.stall,
                "transfer": timing.transfer,
                "global_ops": timing.global_ops,
            },
        )
        if w.phase == "build" and plan.table_mode is TableMode.SEPARATE and not coarse:
            phases.append(merge_phase(plan, workload, cpu, opts.link if opts.discrete else None, build_owner))

    report = ExecutionReport(plan, phases, matches=workload.matches)
    if semantic:
        from .executor import run_semantic

        outcome = run_semantic(plan, workload, R, S, config)
        report.result = outcome.result
        report.arena_ops = outcome.arena_ops
        report.merged_key_nodes = outcome.merged_key_nodes
    log_event(
        "execute",
        {
            "scheme": plan.scheme.value,
            "measured": report.measured,
            "predicted": report.predicted,
            "results": report.result_count,
        },
    )
    return report


def run_join(
    algorithm: Algorithm,
    scheme: Scheme,
    R: Relation,
    S: Relation,
    config: Optional[EngineConfig] = None,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    plan: Optional[Plan] = None,
    chunk_size: Optional[int] = None,
    semantic: bool = True,
) -> ExecutionReport:
    """Plan (unless given) and execute one join"""
    config = config or EngineConfig()
    if cpu is None or gpu is None:
        canned_cpu, canned_gpu = canned_profiles()
        cpu, gpu = cpu or canned_cpu, gpu or canned_gpu
    if plan is not None:
        scheme, algorithm = plan.scheme, plan.algorithm
        config = plan_config(config, plan)
    coarse = scheme is Scheme.COARSE_PL
    workload = build_join_workload(algorithm, R, S, config, coarse=coarse, devices=(cpu, gpu))
    if plan is None:
        plan = plan_join(scheme, workload, cpu, gpu, config, chunk_size)
    return execute(plan, R, S, config, cpu, gpu, workload, semantic)


def basic_unit(
    R: Relation,
    S: Relation,
    chunk_size: int,
    config: Optional[EngineConfig] = None,
    algorithm: Algorithm = Algorithm.SHJ,
    cpu: Optional[DeviceProfile] = None,
    gpu: Optional[DeviceProfile] = None,
    semantic: bool = True,
) -> ExecutionReport:
    """Dynamic chunk scheduling baseline"""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    return run_join(algorithm, Scheme.BASIC_UNIT, R, S, config, cpu, gpu, chunk_size=chunk_size, semantic=semantic)

