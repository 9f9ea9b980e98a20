"""Analytic cost model of a step series on two devices.

For every step and device the model adds computation time C, memory time
M, transfer time X (discrete link only) and pipelined delay D. A device's
time is the sum over steps; the series takes the longer of the two.

All evaluation is vectorized over a batch of ratio vectors so that plan
search and single predictions share the same arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .device import DeviceKind, DeviceProfile, TransferLink
from .steps import ITEM_BYTES, PAIR_BYTES, StepId
from .workload import SeriesWorkload

DeviceRef = Union[DeviceKind, str]


@dataclass
class CostParams:
    """Model inputs for one step series"""

    steps: tuple[StepId, ...]
    x: list[int]
    cpu: DeviceProfile
    gpu: DeviceProfile
    r: list[float] = field(default_factory=list)
    units: dict[str, list[float]] = field(default_factory=dict)
    override: dict[str, list[Optional[float]]] = field(default_factory=dict)
    link: Optional[TransferLink] = None
    item_bytes: int = ITEM_BYTES
    output_bytes: int = PAIR_BYTES
    out_per_item: float = 0.0
    upload_input: bool = True
    download_output: bool = False

    def __post_init__(self) -> None:
        n = len(self.steps)
        if len(self.x) != n:
            raise ValueError(f"x has {len(self.x)} entries for {n} steps")
        if self.r and len(self.r) != n:
            raise ValueError(f"r has {len(self.r)} entries for {n} steps")
        if any(not 0.0 <= v <= 1.0 for v in self.r):
            raise ValueError("ratios must lie in [0, 1]")
        for kind in ("cpu", "gpu"):
            self.units.setdefault(kind, [1.0] * n)
            self.override.setdefault(kind, [None] * n)

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def discrete(self) -> bool:
        return self.link is not None and self.link.enabled

    def device(self, ref: DeviceRef) -> DeviceProfile:
        return self.cpu if DeviceKind(ref) is DeviceKind.CPU else self.gpu

    def with_ratios(self, r: Sequence[float]) -> CostParams:
        return CostParams(
            self.steps, list(self.x), self.cpu, self.gpu, [float(v) for v in r],
            self.units, self.override, self.link, self.item_bytes, self.output_bytes,
            self.out_per_item, self.upload_input, self.download_output,
        )  # fmt: skip

    @classmethod
    def from_workload(
        cls,
        workload: SeriesWorkload,
        cpu: DeviceProfile,
        gpu: DeviceProfile,
        r: Optional[Sequence[float]] = None,
        link: Optional[TransferLink] = None,
    ) -> CostParams:
        """Parameters with units taken from the data, divergence included"""
        x = workload.x
        return cls(
            steps=workload.steps,
            x=[x] * len(workload.steps),
            cpu=cpu,
            gpu=gpu,
            r=[float(v) for v in r] if r is not None else [],
            units={
                "cpu": [workload.effective_units(s, cpu) for s in workload.steps],
                "gpu": [workload.effective_units(s, gpu) for s in workload.steps],
            },
            override={
                "cpu": [workload.override_cost(s, cpu) for s in workload.steps],
                "gpu": [workload.override_cost(s, gpu) for s in workload.steps],
            },
            link=link,
            item_bytes=workload.item_bytes,
            output_bytes=workload.output_bytes,
            out_per_item=workload.out_total() / x if x else 0.0,
            upload_input=workload.upload_input,
            download_output=workload.download_output,
        )


def _unit_costs(params: CostParams, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-item compute and memory seconds at full share, one entry per step"""
    dev = params.device(kind)
    comp = np.zeros(params.n)
    mem = np.zeros(params.n)
    for i, step in enumerate(params.steps):
        fixed = params.override[kind][i]
        if fixed is not None:
            mem[i] = fixed
            continue
        u = params.units[kind][i]
        comp[i] = dev.compute_cost(step, u)
        mem[i] = dev.memory_cost(step, u)
    return comp, mem


def comp_time(params: CostParams, i: int, device: DeviceRef) -> float:
    """C = #I * share * x / (IPC * clock)"""
    kind = DeviceKind(device).value
    if params.override[kind][i] is not None:
        return 0.0
    share = params.r[i] if kind == "cpu" else 1.0 - params.r[i]
    dev = params.device(kind)
    return dev.compute_cost(params.steps[i], params.units[kind][i]) * share * params.x[i]


def mem_time(params: CostParams, i: int, device: DeviceRef) -> float:
    """M = unit memory cost * share * x"""
    kind = DeviceKind(device).value
    share = params.r[i] if kind == "cpu" else 1.0 - params.r[i]
    fixed = params.override[kind][i]
    if fixed is not None:
        return fixed * share * params.x[i]
    dev = params.device(kind)
    return dev.memory_cost(params.steps[i], params.units[kind][i]) * share * params.x[i]


def intermediate_items(r_prev: float, r_cur: float, x: float) -> float:
    """Items crossing devices at a ratio change"""
    for r in (r_prev, r_cur):
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"ratios must lie in [0, 1], got {r}")
    return abs(r_cur - r_prev) * x


def _delays(
    r_prev: np.ndarray,
    r_cur: np.ndarray,
    cpu_before: np.ndarray,
    gpu_before: np.ndarray,
    gpu_prev_step: np.ndarray,
    cpu_step: np.ndarray,
    gpu_step: np.ndarray,
    cpu_prev_busy: Optional[np.ndarray] = None,
    gpu_prev_busy: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore", invalid="ignore"):
        # Case 1: the CPU takes over items the GPU produced first
        frac1 = np.where(1.0 - r_prev > 0, (1.0 - r_cur) / (1.0 - r_prev), 0.0)
        d_cpu = (gpu_before - gpu_prev_step * frac1) - (cpu_before + cpu_step)
        # Case 2: the GPU takes over items the CPU produced last
        frac2 = np.where(1.0 - r_cur > 0, (1.0 - r_prev) / (1.0 - r_cur), 0.0)
        d_gpu = cpu_before - (gpu_before + gpu_step - gpu_step * frac2)
        if gpu_prev_busy is not None:
            # Handed items cannot be consumed before the GPU started producing them
            handed = np.where(r_cur > 0, (r_cur - r_prev) / r_cur, 0.0)
            first_ready = gpu_before - gpu_prev_busy
            d_cpu = np.maximum(d_cpu, first_ready + cpu_step * handed - (cpu_before + cpu_step))
        if cpu_prev_busy is not None:
            handed = np.where(r_prev > 0, (r_prev - r_cur) / r_prev, 0.0)
            first_ready = cpu_before - cpu_prev_busy * handed
            d_gpu = np.maximum(d_gpu, first_ready - gpu_before)
    d_cpu = np.where(r_cur > r_prev, np.maximum(d_cpu, 0.0), 0.0)
    d_gpu = np.where(r_cur < r_prev, np.maximum(d_gpu, 0.0), 0.0)
    return d_cpu, d_gpu


def pipe_delay(
    r_prev: float,
    r_cur: float,
    cpu_before: float,
    gpu_before: float,
    gpu_prev_step: float,
    cpu_step: float,
    gpu_step: float,
    cpu_prev_busy: Optional[float] = None,
    gpu_prev_busy: Optional[float] = None,
) -> tuple[float, float]:
    """Pipelined delay at a step boundary.

    The delay covers the last handed-over item arriving after the taker
    ran out of its own work. With the busy times of the previous step
    given, it also covers the first handed-over item: the producer made
    it no earlier than the start of its previous step's work.

    Args:
        r_prev: CPU share at the previous step
        r_cur: CPU share at this step
        cpu_before: CPU time of all previous steps
        gpu_before: GPU time of all previous steps
        gpu_prev_step: GPU time of the previous step
        cpu_step: CPU time of this step without delay
        gpu_step: GPU time of this step without delay
        cpu_prev_busy: CPU time of the previous step without its delay
        gpu_prev_busy: GPU time of the previous step without its delay

    Returns:
        (D_cpu, D_gpu), both >= 0 and at most one nonzero
    """
    busy = tuple(None if v is None else np.asarray(v, dtype=np.float64) for v in (cpu_prev_busy, gpu_prev_busy))
    d_cpu, d_gpu = _delays(
        *(np.asarray(v, dtype=np.float64) for v in (
            r_prev, r_cur, cpu_before, gpu_before, gpu_prev_step, cpu_step, gpu_step
        )),
        *busy,
    )  # fmt: skip
    return float(d_cpu), float(d_gpu)


@dataclass
class ModelState:
    """Partial sums after a prefix of steps, one row per candidate"""

    r_prev: np.ndarray
    s_cpu: np.ndarray
    s_gpu: np.ndarray
    gpu_prev_step: np.ndarray
    cpu_prev_busy: np.ndarray
    gpu_prev_busy: np.ndarray

    @classmethod
    def initial(cls, m: int) -> ModelState:
        z = np.zeros(m)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy())

    def take(self, index: np.ndarray) -> ModelState:
        return ModelState(
            self.r_prev[index],
            self.s_cpu[index],
            self.s_gpu[index],
            self.gpu_prev_step[index],
            self.cpu_prev_busy[index],
            self.gpu_prev_busy[index],
        )

    @property
    def bound(self) -> np.ndarray:
        """Lower bound on the finished series time"""
        return np.maximum(self.s_cpu, self.s_gpu)


@dataclass
class StepComponents:
    """C, M, X, D of one step for every candidate"""

    c_cpu: np.ndarray
    m_cpu: np.ndarray
    x_cpu: np.ndarray
    d_cpu: np.ndarray
    c_gpu: np.ndarray
    m_gpu: np.ndarray
    x_gpu: np.ndarray
    d_gpu: np.ndarray


class SeriesModel:
    """Precomputed per-step unit costs of one series"""

    def __init__(self, params: CostParams) -> None:
        self.params = params
        self.comp_cpu, self.mem_cpu = _unit_costs(params, "cpu")
        self.comp_gpu, self.mem_gpu = _unit_costs(params, "gpu")

    def _link_time(self, size: np.ndarray) -> np.ndarray:
        link = self.params.link
        assert link is not None
        return np.where(size > 0, link.latency + size / link.bandwidth, 0.0)

    def advance(self, i: int, state: ModelState, r: np.ndarray) -> tuple[ModelState, StepComponents]:
        """Fold step i with CPU shares r into the partial sums"""
        p = self.params
        xi = float(p.x[i])
        g = 1.0 - r
        c_cpu = self.comp_cpu[i] * r * xi
        m_cpu = self.mem_cpu[i] * r * xi
        c_gpu = self.comp_gpu[i] * g * xi
        m_gpu = self.mem_gpu[i] * g * xi
        x_cpu = np.zeros_like(r)
        x_gpu = np.zeros_like(r)
        if p.discrete:
            if i == 0 and p.upload_input:
                x_gpu = x_gpu + self._link_time(g * xi * p.item_bytes)
            if i > 0:
                moved = self._link_time(np.abs(r - state.r_prev) * xi * p.item_bytes)
                x_cpu = x_cpu + np.where(r > state.r_prev, moved, 0.0)
                x_gpu = x_gpu + np.where(r < state.r_prev, moved, 0.0)
            if i == p.n - 1 and p.download_output:
                x_gpu = x_gpu + self._link_time(g * xi * p.out_per_item * p.output_bytes)
        t_cpu = c_cpu + m_cpu + x_cpu
        t_gpu = c_gpu + m_gpu + x_gpu
        if i == 0:
            d_cpu = np.zeros_like(r)
            d_gpu = np.zeros_like(r)
        else:
            d_cpu, d_gpu = _delays(
                state.r_prev,
                r,
                state.s_cpu,
                state.s_gpu,
                state.gpu_prev_step,
                t_cpu,
                t_gpu,
                state.cpu_prev_busy,
                state.gpu_prev_busy,
            )
        new_state = ModelState(
            r_prev=r,
            s_cpu=state.s_cpu + t_cpu + d_cpu,
            s_gpu=state.s_gpu + t_gpu + d_gpu,
            gpu_prev_step=t_gpu + d_gpu,
            cpu_prev_busy=t_cpu,
            gpu_prev_busy=t_gpu,
        )
        return new_state, StepComponents(c_cpu, m_cpu, x_cpu, d_cpu, c_gpu, m_gpu, x_gpu, d_gpu)

    def evaluate(self, R: np.ndarray) -> np.ndarray:
        """Predicted T for each row of an (m, n) ratio matrix"""
        R = np.atleast_2d(np.asarray(R, dtype=np.float64))
        if R.shape[1] != self.params.n:
            raise ValueError(f"expected {self.params.n} ratios per row, got {R.shape[1]}")
        state = ModelState.initial(R.shape[0])
        for i in range(self.params.n):
            state, _ = self.advance(i, state, R[:, i])
        return state.bound


@dataclass
class CostEstimate:
    """Predicted time of one ratio vector with its per-step components"""

    r: list[float]
    C: dict[str, list[float]]
    M: dict[str, list[float]]
    D: dict[str, list[float]]
    X: dict[str, list[float]]
    intermediate_items: list[float]

    def step_total(self, device: str, i: int) -> float:
        return self.C[device][i] + self.M[device][i] + self.D[device][i] + self.X[device][i]

    def device_total(self, device: str) -> float:
        return float(sum(self.step_total(device, i) for i in range(len(self.r))))

    @property
    def T_cpu(self) -> float:
        return self.device_total("cpu")

    @property
    def T_gpu(self) -> float:
        return self.device_total("gpu")

    @property
    def T(self) -> float:
        return max(self.T_cpu, self.T_gpu)


def predict(params: CostParams, r: Optional[Sequence[float]] = None) -> CostEstimate:
    """Assemble C, M, X and D for one ratio vector"""
    if r is not None:
        params = params.with_ratios(r)
    if len(params.r) != params.n:
        raise ValueError(f"need {params.n} ratios, got {len(params.r)}")
    model = SeriesModel(params)
    state = ModelState.initial(1)
    comps = {k: {"cpu": [], "gpu": []} for k in ("C", "M", "D", "X")}  # type: dict[str, dict[str, list[float]]]
    for i in range(params.n):
        state, sc = model.advance(i, state, np.array([params.r[i]]))
        for dev in ("cpu", "gpu"):
            comps["C"][dev].append(float(getattr(sc, f"c_{dev}")[0]))
            comps["M"][dev].append(float(getattr(sc, f"m_{dev}")[0]))
            comps["D"][dev].append(float(getattr(sc, f"d_{dev}")[0]))
            comps["X"][dev].append(float(getattr(sc, f"x_{dev}")[0]))
    moved = [0.0] + [
        intermediate_items(params.r[i - 1], params.r[i], params.x[i]) for i in range(1, params.n)
    ]
    return CostEstimate(list(params.r), comps["C"], comps["M"], comps["D"], comps["X"], moved)


ESTIMATE_HEADER = ["plan_id", "ratios", "T", "T_cpu", "T_gpu"]


def estimate_row(plan_id: str, est: CostEstimate) -> dict[str, object]:
    """Flat CSV row with per-step components"""
    row: dict[str, object] = {
        "plan_id": plan_id,
        "ratios": " ".join(f"{v:.4f}" for v in est.r),
        "T": est.T,
        "T_cpu": est.T_cpu,
        "T_gpu": est.T_gpu,
    }
    for i in range(len(est.r)):
        for comp in ("C", "M", "D", "X"):
            table = getattr(est, comp)
            for dev in ("cpu", "gpu"):
                row[f"{comp}{i + 1}_{dev}"] = table[dev][i]
    return row


def write_estimates_csv(path: Path, rows: Sequence[dict[str, object]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(ESTIMATE_HEADER)
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        writer.writerows(rows)
