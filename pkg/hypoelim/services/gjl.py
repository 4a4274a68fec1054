"""
GJL baseline as described: greedy max-elimination action choice with a fixed
per-stage budget τ_GJL = ceil(log₂(H/δ) / D_min), where D_min is the smallest
non-zero KL divergence among the alive hypotheses under the stage action.
The stage winner maximizes the total log-likelihood and its exact-equality
class survives.
"""
import math
import sys
from collections import Counter
from typing import Callable, List, Optional, Set

import numpy as np

from config import settings
from models.instance import ProblemInstance
from models.policy import GjlStagePlan, RunResult, StageRecord
from services import distributions
from services.elimination import threshold
from services.errors import NoSeparatingActionError, SampleCapReached, UsageError
from services.instance import ObservationSource, check_action, param_table

ALGORITHM_NAME = "gjl-as-described"


def _largest_class(values: np.ndarray) -> int:
    return max(Counter(values.tolist()).values())


def gjl_select_action(inst: ProblemInstance, alive: Set[int]) -> int:
    """
    Action eliminating the most alive hypotheses in the best case, i.e. with
    the smallest largest exact-equality class. Ties go to the smallest index.
    """
    if len(alive) < 2:
        raise UsageError("action selection needs at least two alive hypotheses")
    idx = sorted(alive)
    best, best_size = None, None
    for a in range(inst.num_actions):
        size = _largest_class(param_table(inst, a)[idx, 0])
        if size == len(idx):
            continue
        if best is None or size < best_size:
            best, best_size = a, size
    if best is None:
        raise NoSeparatingActionError(
            "no separating action: every action gives identical parameters on the alive hypotheses",
            f"alive={idx}",
        )
    return best


def d_min(inst: ProblemInstance, alive: Set[int], action: int) -> float:
    """Smallest non-zero D(H_i||H_j) over ordered alive pairs, in bits."""
    idx = sorted(alive)
    spec = inst.actions[action]
    kl = distributions.kl_matrix(spec.family, param_table(inst, action)[idx, 0])
    positive = kl[kl > 0]
    if positive.size == 0:
        raise NoSeparatingActionError(
            "action does not separate any alive pair",
            f"action={action}, alive={idx}",
        )
    return float(positive.min())


def gjl_budget(hypotheses: int, delta: float, dmin: float) -> int:
    """ceil(log₂(H/δ) / D_min), at least 1."""
    if dmin <= 0:
        raise UsageError("D_min must be positive", f"d_min={dmin}")
    return max(1, math.ceil(threshold(hypotheses, delta) / dmin))


def gjl_plan(inst: ProblemInstance, alive: Set[int], action: int, delta: float) -> GjlStagePlan:
    check_action(inst, action)
    dmin = d_min(inst, alive, action)
    return GjlStagePlan(action=action, tau_fixed=gjl_budget(inst.hypotheses, delta, dmin), d_min=dmin)


def gjl_stage(inst: ProblemInstance, alive: Set[int], plan: GjlStagePlan, env: ObservationSource) -> Set[int]:
    """
    Draw exactly tau_fixed observations and keep the exact-equality class of
    the maximum-likelihood alive hypothesis.
    """
    idx = sorted(alive)
    spec = inst.actions[plan.action]
    thetas = param_table(inst, plan.action)[idx, 0]
    totals = np.zeros(len(idx))

    remaining = plan.tau_fixed
    while remaining > 0:
        n = min(remaining, settings.gjl_chunk)
        xs = env.observe_block(plan.action, n)
        totals += distributions.log_likelihood_totals(spec.family, thetas, xs)
        env.consume(n)
        remaining -= n

    # np.argmax returns the first maximum, i.e. the smallest alive index
    winner_pos = int(np.argmax(totals))
    return {h for h, theta in zip(idx, thetas) if theta == thetas[winner_pos]}


def run_gjl(
    inst: ProblemInstance,
    delta: float,
    true_h: int,
    rng: np.random.Generator,
    sample_cap: Optional[int] = None,
    on_stage: Optional[Callable[[StageRecord], None]] = None,
    action_override: Optional[List[int]] = None,
) -> RunResult:
    """One trial of the GJL baseline."""
    env = ObservationSource(inst, true_h, rng)
    alive = set(range(inst.hypotheses))
    stages: List[StageRecord] = []
    total = 0

    while len(alive) > 1:
        r = len(stages)
        if action_override and r < len(action_override):
            action = action_override[r]
        else:
            action = gjl_select_action(inst, alive)
        plan = gjl_plan(inst, alive, action, delta)
        if sample_cap is not None and total + plan.tau_fixed > sample_cap:
            raise SampleCapReached(cap=sample_cap, used=total)

        survivors = gjl_stage(inst, alive, plan, env)
        record = StageRecord(
            stage=r,
            action=action,
            tau=plan.tau_fixed,
            winner=min(survivors),
            eliminated=len(alive) - len(survivors),
            alive_before=sorted(alive),
            alive_after=sorted(survivors),
        )
        stages.append(record)
        total += plan.tau_fixed
        alive = survivors
        if on_stage:
            on_stage(record)
        if settings.debug:
            print(f"[GJL] stage {r}: action={action} tau={plan.tau_fixed} d_min={plan.d_min:.4g} "
                  f"alive={len(alive)}", file=sys.stderr)

    declared = next(iter(alive))
    return RunResult(
        algorithm=ALGORITHM_NAME,
        declared=declared,
        true_hypothesis=true_h,
        total_samples=total,
        correct=declared == true_h,
        stages=stages,
    )
