"""Generated build/probe inputs of an experiment"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from cojoin.data.relation import Distribution, GenSpec, Relation, generate, read_bin


@dataclass(frozen=True)
class JoinInputs:
    """Either two relation files or the parameters to generate them.

    The probe relation is drawn against the build relation with the given
    selectivity, using seed + 1.
    """

    r_size: int = 65536
    s_size: int = 65536
    s_percent: int = 0
    selectivity: float = 1.0
    seed: int = 42
    r_path: Optional[Path] = None
    s_path: Optional[Path] = None

    @property
    def from_files(self) -> bool:
        return self.r_path is not None and self.s_path is not None

    def with_sizes(self, r_size: Optional[int] = None, s_size: Optional[int] = None) -> JoinInputs:
        return replace(
            self,
            r_size=self.r_size if r_size is None else r_size,
            s_size=self.s_size if s_size is None else s_size,
        )

    def with_selectivity(self, selectivity: float) -> JoinInputs:
        return replace(self, selectivity=selectivity)

    def build_spec(self) -> GenSpec:
        dist = Distribution.SKEWED if self.s_percent else Distribution.UNIFORM
        return GenSpec(self.r_size, dist, self.s_percent, seed=self.seed)

    def probe_spec(self) -> GenSpec:
        return GenSpec(self.s_size, seed=self.seed + 1, selectivity=self.selectivity)

    def load(self) -> tuple[Relation, Relation]:
        """Read or generate (R, S)"""
        if self.from_files:
            assert self.r_path is not None and self.s_path is not None
            return read_bin(self.r_path), read_bin(self.s_path)
        R = generate(self.build_spec())
        return R, generate(self.probe_spec(), build=R)

    def describe(self) -> str:
        if self.from_files:
            return f"{self.r_path} x {self.s_path}"
        skew = f", s={self.s_percent}%" if self.s_percent else ""
        return f"|R|={self.r_size}, |S|={self.s_size}, sel={self.selectivity}{skew}, seed={self.seed}"
