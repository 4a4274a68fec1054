"""
Monte-Carlo experiment engine.

Every trial gets its own stream derived from (master seed, algorithm id,
δ index, trial index). Trials are split into contiguous chunks that run in a
process pool; chunk results are merged back in trial order, so a cell's
statistics do not depend on the number of workers.
"""
import math
import sys
from concurrent.futures import Executor, Future, ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binomtest

from config import settings
from models.experiment import (
    AlgorithmKind, AlgorithmSpec, CellStats, ExperimentConfig, ExperimentResult,
)
from models.instance import ProblemInstance
from models.policy import PolicyConfig, RunResult
from services.elimination import EliminationPolicy
from services.errors import (
    AssumptionViolation, HypoElimError, SampleCapReached, TrialFailedError, UsageError,
)
from services.gjl import run_gjl
from services.instance import cached_assumptions, draw_true_hypothesis, load_instance
from services.streams import derive_stream, trial_seed_words
from services.trace import TaskTimer

# Chunks per worker; more chunks smooth out uneven trial lengths
CHUNKS_PER_WORKER = 4

# ε values per benchmark size: H = 16 with |A| = 17, and the small H = 4 variant
BENCHMARK_PRESETS = {
    16: (0.0, 0.1),
    4: (0.0, 0.3, 1.0),
}
BENCHMARK_DELTAS = (1e-1, 1e-2, 1e-3)


# ─────────────────────────────────────────────────────────────────────────────
# TRIALS
# ─────────────────────────────────────────────────────────────────────────────

@dataclass
class TrialOutcome:
    samples: int
    correct: bool
    capped: bool = False
    first_error_stage: Optional[int] = None


@dataclass
class ChunkFailure:
    """A failed trial, as plain data so it crosses process boundaries intact."""
    seed_words: Tuple[int, ...]
    error: str
    exit_code: int
    message: str
    technical_detail: Optional[str] = None

    def raise_error(self) -> None:
        cause = HypoElimError(f"{self.error}: {self.message}", self.technical_detail)
        cause.exit_code = self.exit_code
        raise TrialFailedError(cause, self.seed_words)


class TrialRunner:
    """Runs trials of one algorithm at one δ; reuses the policy's selection memo."""

    def __init__(self, inst: ProblemInstance, algorithm: AlgorithmSpec, delta: float,
                 sample_cap: Optional[int] = None):
        self.inst = inst
        self.algorithm = algorithm
        self.delta = delta
        self.sample_cap = sample_cap
        self.policy = None
        if algorithm.kind is AlgorithmKind.ELIMINATION:
            cfg = PolicyConfig(
                delta=delta,
                clustering=algorithm.clustering(),
                max_samples_per_stage=settings.max_samples_per_stage,
            )
            self.policy = EliminationPolicy(inst, cfg)

    def run(self, rng: np.random.Generator) -> RunResult:
        true_h = draw_true_hypothesis(self.inst, rng)
        if self.policy is not None:
            return self.policy.run(true_h, rng, sample_cap=self.sample_cap)
        return run_gjl(self.inst, self.delta, true_h, rng, sample_cap=self.sample_cap)

    def outcome(self, seed_words: Sequence[int]) -> TrialOutcome:
        try:
            result = self.run(derive_stream(*seed_words))
        except SampleCapReached:
            return TrialOutcome(samples=0, correct=False, capped=True)
        return TrialOutcome(
            samples=result.total_samples,
            correct=result.correct,
            first_error_stage=result.first_error_stage,
        )


def execute_trial(inst: ProblemInstance, algorithm: AlgorithmSpec, delta: float,
                  seed_words: Sequence[int], sample_cap: Optional[int] = None) -> TrialOutcome:
    """One trial: draw the true hypothesis from the priors and run the algorithm."""
    return TrialRunner(inst, algorithm, delta, sample_cap).outcome(seed_words)


def _run_chunk(
    inst: ProblemInstance,
    algorithm: AlgorithmSpec,
    delta: float,
    cell_key: Tuple[int, int, int],
    start: int,
    count: int,
    sample_cap: Optional[int],
) -> Union[List[TrialOutcome], ChunkFailure]:
    """Trials start..start+count-1 of a cell. Top-level so worker processes can run it."""
    runner = TrialRunner(inst, algorithm, delta, sample_cap)
    outcomes = []
    for trial in range(start, start + count):
        words = trial_seed_words(*cell_key, trial)
        try:
            outcomes.append(runner.outcome(words))
        except HypoElimError as e:
            return ChunkFailure(
                seed_words=words,
                error=type(e).__name__,
                exit_code=e.exit_code,
                message=e.message,
                technical_detail=e.technical_detail,
            )
    return outcomes


def _chunks(trials: int, workers: int) -> List[Tuple[int, int]]:
    """Contiguous (start, size) ranges covering 0..trials-1."""
    parts = max(1, min(trials, workers * CHUNKS_PER_WORKER if workers > 1 else 1))
    base, rem = divmod(trials, parts)
    ranges = []
    start = 0
    for i in range(parts):
        size = base + (1 if i < rem else 0)
        if size > 0:
            ranges.append((start, size))
            start += size
    return ranges


# ─────────────────────────────────────────────────────────────────────────────
# AGGREGATION
# ─────────────────────────────────────────────────────────────────────────────

def aggregate(
    inst: ProblemInstance,
    algorithm: AlgorithmSpec,
    delta: float,
    outcomes: List[TrialOutcome],
) -> CellStats:
    """Cell statistics from outcomes listed in trial order."""
    completed = [o for o in outcomes if not o.capped]
    n = len(completed)
    errors = sum(1 for o in completed if not o.correct)
    H = inst.hypotheses

    if n:
        samples = np.array([o.samples for o in completed], dtype=float)
        mean_n = float(np.mean(samples))
        stderr_n = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        p_e_hat = errors / n
        wilson = float(binomtest(errors, n).proportion_ci(confidence_level=0.95, method="wilson").high)
        abr = delta / H ** 2 * mean_n + p_e_hat
    else:
        mean_n = stderr_n = abr = math.nan
        p_e_hat = 0.0
        wilson = 1.0

    depth = max((o.first_error_stage for o in completed if o.first_error_stage is not None), default=-1)
    stage_errors = [0] * (depth + 1)
    for o in completed:
        if o.first_error_stage is not None:
            stage_errors[o.first_error_stage] += 1

    capped_trials = len(outcomes) - n
    return CellStats(
        algorithm=algorithm.name,
        family=instance_family(inst),
        delta=delta,
        epsilon=algorithm.epsilon if algorithm.kind is AlgorithmKind.ELIMINATION else 0.0,
        hypotheses=H,
        ordering_rank=algorithm.ordering_rank,
        trials=n,
        errors=errors,
        p_e_hat=p_e_hat,
        p_e_wilson_upper=wilson,
        mean_n=mean_n,
        stderr_n=stderr_n,
        abr=abr,
        capped=capped_trials > 0,
        capped_trials=capped_trials,
        stage_errors=stage_errors,
    )


def instance_family(inst: ProblemInstance) -> str:
    families = {a.family.value for a in inst.actions}
    return families.pop() if len(families) == 1 else "mixed"


# ─────────────────────────────────────────────────────────────────────────────
# CELLS AND SWEEPS
# ─────────────────────────────────────────────────────────────────────────────

def _submit_cell(executor: Optional[Executor], workers: int, inst: ProblemInstance,
                 algorithm: AlgorithmSpec, delta: float, trials: int,
                 cell_key: Tuple[int, int, int], sample_cap: Optional[int]) -> list:
    parts = []
    for start, size in _chunks(trials, workers):
        args = (inst, algorithm, delta, cell_key, start, size, sample_cap)
        parts.append(executor.submit(_run_chunk, *args) if executor else _run_chunk(*args))
    return parts


def _collect(parts: list) -> List[TrialOutcome]:
    outcomes: List[TrialOutcome] = []
    for part in parts:
        chunk = part.result() if isinstance(part, Future) else part
        if isinstance(chunk, ChunkFailure):
            chunk.raise_error()
        outcomes.extend(chunk)
    return outcomes


def run_cell(
    inst: ProblemInstance,
    algorithm: AlgorithmSpec,
    delta: float,
    trials: int,
    master_seed: int = 0,
    algorithm_id: int = 0,
    delta_index: int = 0,
    workers: Optional[int] = None,
    sample_cap: Optional[int] = None,
) -> CellStats:
    """Run `trials` independent trials of one algorithm at one δ."""
    if trials < 1:
        raise UsageError("a cell needs at least one trial", f"trials={trials}")
    workers = settings.resolved_workers(workers)
    cell_key = (master_seed, algorithm_id, delta_index)

    with TaskTimer() as timer:
        if workers == 1:
            outcomes = _collect(_submit_cell(None, 1, inst, algorithm, delta, trials, cell_key, sample_cap))
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                outcomes = _collect(_submit_cell(ex, workers, inst, algorithm, delta, trials, cell_key, sample_cap))

    stats = aggregate(inst, algorithm, delta, outcomes)
    _log_cell(stats, timer.execution_time_ms)
    return stats


def cell_trials(config: ExperimentConfig, algorithm: AlgorithmSpec) -> int:
    """Cell override, then the experiment's count, then the per-algorithm default."""
    if algorithm.trials:
        return algorithm.trials
    if config.trials_per_cell:
        return config.trials_per_cell
    return settings.gjl_trials if algorithm.kind is AlgorithmKind.GJL else settings.elimination_trials


def sweep(config: ExperimentConfig, instance: Optional[ProblemInstance] = None,
          workers: Optional[int] = None) -> ExperimentResult:
    """Every (algorithm, δ) cell of the configuration, in algorithm-then-δ order."""
    inst = instance
    if inst is None:
        if not config.instance_path:
            raise UsageError("the experiment names no instance", "set instance_path or pass an instance")
        inst = load_instance(config.instance_path)

    report = cached_assumptions(inst)
    if not report.a3_holds:
        raise AssumptionViolation(
            "instance violates validity: some pair is never separated",
            f"violating pairs: {report.violating_pairs}",
        )

    workers = settings.resolved_workers(workers)
    cells = [
        (algo_id, algorithm, delta_index, delta)
        for algo_id, algorithm in enumerate(config.algorithms)
        for delta_index, delta in enumerate(config.delta_grid)
    ]
    print(f"[Harness] Sweep: {len(cells)} cells, H={inst.hypotheses}, workers={workers}", file=sys.stderr)

    results: List[CellStats] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 and cells else None
    try:
        with TaskTimer() as timer:
            pending = [
                _submit_cell(executor, workers, inst, algorithm, delta,
                             cell_trials(config, algorithm), (config.master_seed, algo_id, delta_index),
                             config.trial_cap_runtime)
                for algo_id, algorithm, delta_index, delta in cells
            ]
            for (_, algorithm, _, delta), parts in zip(cells, pending):
                stats = aggregate(inst, algorithm, delta, _collect(parts))
                _log_cell(stats)
                results.append(stats)
    finally:
        if executor:
            executor.shutdown(cancel_futures=True)

    print(f"[Harness] Sweep finished in {timer.execution_time_ms} ms", file=sys.stderr)
    return ExperimentResult(
        hypotheses=inst.hypotheses,
        family=instance_family(inst),
        master_seed=config.master_seed,
        cells=results,
    )


def _log_cell(stats: CellStats, elapsed_ms: Optional[int] = None) -> None:
    timing = f" in {elapsed_ms} ms" if elapsed_ms is not None else ""
    capped = f", {stats.capped_trials} capped" if stats.capped else ""
    print(f"[Harness] {stats.algorithm} δ={stats.delta:g}: {stats.trials} trials, "
          f"{stats.errors} errors, mean N={stats.mean_n:.6g}{capped}{timing}", file=sys.stderr)


# ─────────────────────────────────────────────────────────────────────────────
# PRESETS
# ─────────────────────────────────────────────────────────────────────────────

def benchmark_sweep_config(
    hypotheses: int = 16,
    instance_path: Optional[str] = None,
    delta_grid: Sequence[float] = BENCHMARK_DELTAS,
    master_seed: int = 0,
    trials_per_cell: Optional[int] = None,
    trial_cap_runtime: Optional[int] = None,
) -> ExperimentConfig:
    """Benchmark sweep: elimination at the preset ε values, plus GJL."""
    if hypotheses not in BENCHMARK_PRESETS:
        raise UsageError(
            f"no benchmark preset for H={hypotheses}",
            f"available: {sorted(BENCHMARK_PRESETS)}",
        )
    algorithms = [AlgorithmSpec(kind=AlgorithmKind.ELIMINATION, epsilon=eps) for eps in BENCHMARK_PRESETS[hypotheses]]
    algorithms.append(AlgorithmSpec(kind=AlgorithmKind.GJL))
    return ExperimentConfig(
        instance_path=instance_path,
        algorithms=algorithms,
        delta_grid=list(delta_grid),
        trials_per_cell=trials_per_cell,
        master_seed=master_seed,
        trial_cap_runtime=trial_cap_runtime,
    )
