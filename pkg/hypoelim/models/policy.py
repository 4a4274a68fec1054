"""
Policy models: clustering configuration, cluster maps, elimination/GJL
configuration, per-stage state and run results.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


# ═══════════════════════════════════════════════════════════════════════════
# CLUSTERING
# ═══════════════════════════════════════════════════════════════════════════

class ClusteringConfig(BaseModel):
    """Per-action proximity thresholds on SQUARED parameter distance."""
    epsilon: Dict[int, float] = {}  # action -> ε_a; missing actions use default_epsilon
    default_epsilon: float = Field(0.0, ge=0.0)
    min_pts: int = Field(1, ge=1)

    class Config:
        frozen = True

    @field_validator("epsilon")
    @classmethod
    def _finite_non_negative(cls, value: Dict[int, float]) -> Dict[int, float]:
        for action, eps in value.items():
            if not math.isfinite(eps) or eps < 0:
                raise ValueError(f"epsilon for action {action} must be finite and >= 0")
        return value

    @classmethod
    def uniform(cls, epsilon: float, min_pts: int = 1) -> "ClusteringConfig":
        return cls(default_epsilon=epsilon, min_pts=min_pts)

    def epsilon_for(self, action: int) -> float:
        return self.epsilon.get(action, self.default_epsilon)

    def cache_key(self, num_actions: int) -> tuple:
        return (tuple(self.epsilon_for(a) for a in range(num_actions)), self.min_pts)


class ClusterMap(BaseModel):
    """Partition of the hypotheses into proximity clusters, one label vector per action."""
    labels: List[List[int]]
    epsilon: List[float]
    min_pts: int = 1

    class Config:
        frozen = True

    @property
    def num_actions(self) -> int:
        return len(self.labels)

    @property
    def num_hypotheses(self) -> int:
        return len(self.labels[0]) if self.labels else 0

    def clusters(self, action: int) -> List[List[int]]:
        """Clusters of one action as sorted index lists, ordered by smallest member."""
        groups: Dict[int, List[int]] = {}
        for h, label in enumerate(self.labels[action]):
            groups.setdefault(label, []).append(h)
        return sorted(groups.values(), key=lambda g: g[0])


class EpsilonValidation(BaseModel):
    """ΔD margin certificate of one action's ε choice."""
    action: int
    epsilon: float
    margin: Optional[float] = None  # min ΔD_ijk in bits; None when uninformative
    uninformative: bool = False

    @property
    def certified(self) -> bool:
        return self.margin is not None and self.margin > 0


# ═══════════════════════════════════════════════════════════════════════════
# ELIMINATION POLICY
# ═══════════════════════════════════════════════════════════════════════════

class PolicyConfig(BaseModel):
    """Configuration of the multi-stage elimination policy."""
    delta: float = Field(..., gt=0.0, lt=1.0)
    clustering: ClusteringConfig = ClusteringConfig()
    max_samples_per_stage: int = Field(1_000_000_000, ge=1)
    action_override: Optional[List[int]] = None

    class Config:
        frozen = True


@dataclass
class StageState:
    """Live state of one stage: contestants and their accumulated log-likelihoods.

    The pairwise LLR matrix is derived from the per-contestant totals so that
    L_ij = S_i - S_j holds by construction.
    """
    alive: Set[int]
    contestants: List[int]
    action: int
    totals: np.ndarray = field(default=None)
    tau: int = 0

    def __post_init__(self):
        if self.totals is None:
            self.totals = np.zeros(len(self.contestants))

    @property
    def llr(self) -> np.ndarray:
        return self.totals[:, None] - self.totals[None, :]

    def winners(self, gamma: float) -> List[int]:
        """All contestants with L_ij >= gamma against every other contestant."""
        llr = self.llr
        np.fill_diagonal(llr, np.inf)
        mask = (llr >= gamma).all(axis=1)
        return [self.contestants[i] for i in np.flatnonzero(mask)]

    def antisymmetry_error(self) -> float:
        llr = self.llr
        return float(np.max(np.abs(llr + llr.T))) if llr.size else 0.0


class StageRecord(BaseModel):
    """One stage of a run, as exported in traces."""
    stage: int
    action: int
    tau: int
    winner: int
    eliminated: int
    alive_before: List[int]
    alive_after: List[int]


class RunResult(BaseModel):
    """Outcome of one trial of either algorithm."""
    algorithm: str
    declared: int
    true_hypothesis: int
    total_samples: int = Field(..., ge=0)
    correct: bool
    stages: List[StageRecord] = []

    @model_validator(mode="after")
    def _samples_add_up(self) -> "RunResult":
        if sum(s.tau for s in self.stages) != self.total_samples:
            raise ValueError("total_samples must equal the sum of stage samples")
        return self

    @property
    def first_error_stage(self) -> Optional[int]:
        """Index of the first stage that eliminated the true hypothesis, if any."""
        for record in self.stages:
            if self.true_hypothesis in record.alive_before and self.true_hypothesis not in record.alive_after:
                return record.stage
        return None


class DelayBounds(BaseModel):
    """Lower/upper bounds on the mean number of samples."""
    gamma: float
    lower: Optional[float] = None  # (1/β) log(H/δ)
    upper: float = math.inf  # max_a (H/ε_a) log(H/δ)


# ═══════════════════════════════════════════════════════════════════════════
# GJL BASELINE
# ═══════════════════════════════════════════════════════════════════════════

class GjlStagePlan(BaseModel):
    """Fixed sample budget of one GJL stage."""
    action: int
    tau_fixed: int = Field(..., ge=1)
    d_min: float = Field(..., gt=0.0)
