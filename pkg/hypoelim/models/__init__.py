"""
Pydantic models for instances, policies and experiments.
"""
from .instance import Family, ActionSpec, ProblemInstance, Observation, AssumptionReport
from .policy import (
    ClusteringConfig,
    ClusterMap,
    EpsilonValidation,
    PolicyConfig,
    StageState,
    StageRecord,
    RunResult,
    DelayBounds,
    GjlStagePlan
)
from .experiment import (
    AlgorithmKind,
    AlgorithmSpec,
    ExperimentConfig,
    CellStats,
    ExperimentResult,
    RankedEntry,
    DeltaComparison,
    CompareReport
)

__all__ = [
    "Family",
    "ActionSpec",
    "ProblemInstance",
    "Observation",
    "AssumptionReport",
    # Policy models
    "ClusteringConfig",
    "ClusterMap",
    "EpsilonValidation",
    "PolicyConfig",
    "StageState",
    "StageRecord",
    "RunResult",
    "DelayBounds",
    "GjlStagePlan",
    # Experiment models
    "AlgorithmKind",
    "AlgorithmSpec",
    "ExperimentConfig",
    "CellStats",
    "ExperimentResult",
    "RankedEntry",
    "DeltaComparison",
    "CompareReport"
]
