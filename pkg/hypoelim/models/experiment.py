"""
Experiment models for Monte-Carlo sweeps and their comparison reports.
"""
import math
from enum import Enum
from typing import Dict, List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator

from models.policy import ClusteringConfig


# ═══════════════════════════════════════════════════════════════════════════
# CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════

class AlgorithmKind(str, Enum):
    ELIMINATION = "elimination"
    GJL = "gjl"


class AlgorithmSpec(BaseModel):
    """One algorithm entry of a sweep."""
    kind: AlgorithmKind
    epsilon: float = Field(0.0, ge=0.0)  # uniform ε for elimination
    epsilon_per_action: Dict[int, float] = {}
    min_pts: int = Field(1, ge=1)
    trials: Optional[int] = Field(None, ge=1)  # cell-level override
    label: Optional[str] = None

    class Config:
        frozen = True

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind is AlgorithmKind.GJL:
            return "gjl-as-described"
        return f"elim(eps={self.epsilon!r})"

    @property
    def clustered(self) -> bool:
        return self.kind is AlgorithmKind.ELIMINATION and (
            self.epsilon > 0 or any(v > 0 for v in self.epsilon_per_action.values())
        )

    @property
    def ordering_rank(self) -> int:
        """Expected ordering by mean samples: clustered < plain elimination < GJL."""
        if self.kind is AlgorithmKind.GJL:
            return 2
        return 0 if self.clustered else 1

    def clustering(self) -> ClusteringConfig:
        return ClusteringConfig(
            epsilon=self.epsilon_per_action,
            default_epsilon=self.epsilon,
            min_pts=self.min_pts,
        )

    @classmethod
    def parse(cls, token: str) -> "AlgorithmSpec":
        """Parse CLI tokens like 'gjl', 'elim', 'elim:0.1'."""
        kind, _, value = token.strip().partition(":")
        if kind == "gjl":
            return cls(kind=AlgorithmKind.GJL)
        if kind in ("elim", "elimination"):
            return cls(kind=AlgorithmKind.ELIMINATION, epsilon=float(value) if value else 0.0)
        raise ValueError(f"unknown algorithm '{token}' (expected gjl or elim[:epsilon])")


class ExperimentConfig(BaseModel):
    """A sweep over algorithms and a δ grid on one instance."""
    instance_path: Optional[str] = None
    algorithms: List[AlgorithmSpec] = []
    delta_grid: List[float] = Field(..., min_length=1)
    trials_per_cell: Optional[int] = Field(None, ge=1)
    master_seed: int = Field(0, ge=0)
    trial_cap_runtime: Optional[int] = Field(None, ge=1)  # per-trial sample cap

    @field_validator("delta_grid")
    @classmethod
    def _sorted_descending(cls, value: List[float]) -> List[float]:
        if any(not (0.0 < d < 1.0) for d in value):
            raise ValueError("every delta must lie in (0, 1)")
        return sorted(set(value), reverse=True)


# ═══════════════════════════════════════════════════════════════════════════
# RESULTS
# ═══════════════════════════════════════════════════════════════════════════

class CellStats(BaseModel):
    """Aggregated statistics of one (algorithm, δ) cell."""
    algorithm: str
    family: str
    delta: float
    epsilon: float
    hypotheses: int
    ordering_rank: int = 1
    trials: int  # completed trials
    errors: int
    p_e_hat: float = Field(..., ge=0.0, le=1.0)
    p_e_wilson_upper: float
    mean_n: float
    stderr_n: float
    abr: float
    capped: bool = False
    capped_trials: int = 0
    stage_errors: List[int] = []  # entry r: trials whose true hypothesis was eliminated at stage r

    @model_validator(mode="after")
    def _check_abr(self) -> "CellStats":
        if self.trials > 0 and not math.isnan(self.mean_n):
            if self.mean_n < 1:
                raise ValueError("mean_n must be at least 1")
            if self.abr < (self.delta / self.hypotheses ** 2) * self.mean_n:
                raise ValueError("abr must not be below its sample-cost term")
        return self


class ExperimentResult(BaseModel):
    """All cells of a sweep, in (algorithm, δ) order."""
    hypotheses: int
    family: str
    master_seed: int = Field(0, ge=0)
    cells: List[CellStats] = []


class RankedEntry(BaseModel):
    algorithm: str
    mean_n: float
    ratio_to_best: float


class DeltaComparison(BaseModel):
    delta: float
    ranking: List[RankedEntry]
    ordering_violations: List[str] = []


class CompareReport(BaseModel):
    """Per-δ ranking of algorithms by mean samples."""
    comparisons: List[DeltaComparison] = []

    @property
    def ordering_holds(self) -> bool:
        return all(not c.ordering_violations for c in self.comparisons)
