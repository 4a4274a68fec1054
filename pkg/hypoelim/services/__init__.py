"""
Service layer - simulation logic.
"""
from .errors import (
    HypoElimError,
    UsageError,
    AssumptionViolation,
    NoSeparatingActionError,
    StageOverrunError,
    TrialFailedError,
)
from .instance import generate_paper_instance, verify_assumptions, load_instance, save_instance
from .clustering import build_cluster_map, equiv, representatives, validate_epsilon
from .elimination import EliminationPolicy, select_action, run_stage, run, threshold
from .gjl import gjl_select_action, gjl_stage, run_gjl
from .harness import run_cell, sweep, benchmark_sweep_config
from .reporting import compare_report, write_csv

__all__ = [
    "HypoElimError",
    "UsageError",
    "AssumptionViolation",
    "NoSeparatingActionError",
    "StageOverrunError",
    "TrialFailedError",
    "generate_paper_instance",
    "verify_assumptions",
    "load_instance",
    "save_instance",
    "build_cluster_map",
    "equiv",
    "representatives",
    "validate_epsilon",
    "EliminationPolicy",
    "select_action",
    "run_stage",
    "run",
    "threshold",
    "gjl_select_action",
    "gjl_stage",
    "run_gjl",
    "run_cell",
    "sweep",
    "benchmark_sweep_config",
    "compare_report",
    "write_csv",
]
