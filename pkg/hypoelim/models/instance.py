"""
Problem-instance models: hypotheses, priors, actions and their parameter tables.
"""
import math
from enum import Enum
from typing import List, Optional, Tuple
from pydantic import BaseModel, Field, model_validator


# ─────────────────────────────────────────────────────────────────────────────
# DISTRIBUTION FAMILIES
# ─────────────────────────────────────────────────────────────────────────────

class Family(str, Enum):
    """Observation-distribution family of an action (scalar observations)."""
    NORMAL_UNIT_VARIANCE = "normal_unit_variance"
    EXPONENTIAL_BY_MEAN = "exponential_by_mean"

    @property
    def param_dimension(self) -> int:
        return 1

    @classmethod
    def from_cli(cls, name: str) -> "Family":
        """Accept the short CLI names ('normal', 'exponential') and the schema names."""
        aliases = {
            "normal": cls.NORMAL_UNIT_VARIANCE,
            "exponential": cls.EXPONENTIAL_BY_MEAN,
        }
        if name in aliases:
            return aliases[name]
        return cls(name)


# ─────────────────────────────────────────────────────────────────────────────
# INSTANCE
# ─────────────────────────────────────────────────────────────────────────────

class ActionSpec(BaseModel):
    """One action: a family and θ_i(a) for every hypothesis i."""
    family: Family
    params: List[List[float]] = Field(..., min_length=1)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_params(self) -> "ActionSpec":
        dims = {len(p) for p in self.params}
        if len(dims) != 1:
            raise ValueError(f"parameter vectors have mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        if dim != self.family.param_dimension:
            raise ValueError(f"{self.family.value} expects dimension {self.family.param_dimension}, got {dim}")
        for i, theta in enumerate(self.params):
            if not all(math.isfinite(v) for v in theta):
                raise ValueError(f"non-finite parameter for hypothesis {i}")
            if self.family is Family.EXPONENTIAL_BY_MEAN and any(v <= 0 for v in theta):
                raise ValueError(f"exponential mean must be positive (hypothesis {i})")
        return self

    @property
    def dimension(self) -> int:
        return len(self.params[0])


class ProblemInstance(BaseModel):
    """Hypothesis set, priors and actions. Immutable once built."""
    hypotheses: int = Field(..., ge=2)
    priors: List[float]
    actions: List[ActionSpec] = Field(..., min_length=1)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_shape(self) -> "ProblemInstance":
        if len(self.priors) != self.hypotheses:
            raise ValueError(f"expected {self.hypotheses} priors, got {len(self.priors)}")
        if any(not (0.0 < p < 1.0) for p in self.priors):
            raise ValueError("every prior must lie strictly between 0 and 1")
        if abs(math.fsum(self.priors) - 1.0) > 1e-12:
            raise ValueError(f"priors sum to {math.fsum(self.priors)!r}, not 1")
        for a, action in enumerate(self.actions):
            if len(action.params) != self.hypotheses:
                raise ValueError(
                    f"action {a} has {len(action.params)} parameter vectors for {self.hypotheses} hypotheses"
                )
        return self

    @property
    def num_actions(self) -> int:
        return len(self.actions)


class Observation(BaseModel):
    """A single sample X_n obtained with action a_n."""
    value: float
    action: int = Field(..., ge=0)
    time_index: int = Field(1, ge=1)


# ─────────────────────────────────────────────────────────────────────────────
# ASSUMPTION REPORT
# ─────────────────────────────────────────────────────────────────────────────

class AssumptionReport(BaseModel):
    """Separation / validity diagnostics (A1-A3) for an instance."""
    alpha: Optional[float] = None  # min strictly positive KLD
    beta: Optional[float] = None  # max KLD
    c1: Optional[float] = None  # min ||Δθ||² / KLD over nonidentical pairs
    c2: Optional[float] = None
    a1_holds: bool
    a3_holds: bool
    uninformative_actions: List[int] = []
    violating_pairs: List[Tuple[int, int]] = []

    @model_validator(mode="after")
    def _check_order(self) -> "AssumptionReport":
        if self.alpha is not None and self.beta is not None and self.alpha > self.beta:
            raise ValueError("alpha must not exceed beta")
        if self.c1 is not None and self.c2 is not None and self.c1 > self.c2:
            raise ValueError("c1 must not exceed c2")
        return self

    @property
    def holds(self) -> bool:
        return self.a1_holds and self.a3_holds
