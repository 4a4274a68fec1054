"""
Multi-stage LLR-based elimination policy.

Each stage selects the action with the largest minimum cross-cluster squared
parameter distance among the alive hypotheses, runs a sequential likelihood-ratio contest
between one representative per cluster until a contestant leads every other
by γ = log₂(H/δ) bits, and keeps the alive hypotheses of the winner's cluster.
H is the initial number of hypotheses in every stage.
"""
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Set

import numpy as np

from config import settings
from models.instance import AssumptionReport, ProblemInstance
from models.policy import (
    ClusterMap, DelayBounds, PolicyConfig, RunResult, StageRecord, StageState,
)
from services import distributions
from services.clustering import equiv, get_cluster_map, representatives
from services.errors import (
    NoSeparatingActionError, SampleCapReached, StageOverrunError, UsageError,
    WinnerUniquenessError,
)
from services.instance import ObservationSource, check_action, param_table

ALGORITHM_NAME = "elimination"


@dataclass
class StageOutcome:
    winner: int
    tau: int
    state: StageState


def threshold(hypotheses: int, delta: float) -> float:
    """γ = log₂(H/δ)."""
    if not 0.0 < delta < 1.0:
        raise UsageError("delta must lie in (0, 1)", f"delta={delta}")
    return math.log2(hypotheses / delta)


# ─────────────────────────────────────────────────────────────────────────────
# ACTION SELECTION
# ─────────────────────────────────────────────────────────────────────────────

def separation_scores(inst: ProblemInstance, cluster_map: ClusterMap, alive: Set[int]) -> List[Optional[float]]:
    """
    Per action: min squared distance over alive pairs in different clusters.
    None when all alive hypotheses share one cluster under the action.
    """
    idx = np.array(sorted(alive))
    scores: List[Optional[float]] = []
    for a in range(inst.num_actions):
        sq = distributions.squared_distance_matrix(param_table(inst, a)[idx])
        labels = np.asarray(cluster_map.labels[a])[idx]
        cross = labels[:, None] != labels[None, :]
        scores.append(float(sq[cross].min()) if cross.any() else None)
    return scores


def select_action(inst: ProblemInstance, cluster_map: ClusterMap, alive: Set[int]) -> int:
    """argmax of separation_scores; ties go to the smallest action index."""
    if len(alive) < 2:
        raise UsageError("action selection needs at least two alive hypotheses")
    scores = separation_scores(inst, cluster_map, alive)
    best = None
    for a, score in enumerate(scores):
        if score is None:
            continue
        if best is None or score > scores[best]:
            best = a
    if best is None:
        raise NoSeparatingActionError(
            "no separating action: every action puts the alive hypotheses in one cluster",
            f"alive={sorted(alive)}",
        )
    return best


# ─────────────────────────────────────────────────────────────────────────────
# STAGE
# ─────────────────────────────────────────────────────────────────────────────

def _leading_gap(cum: np.ndarray) -> np.ndarray:
    """Best minus second-best accumulated log-likelihood, per row."""
    if cum.shape[1] == 2:
        return np.abs(cum[:, 0] - cum[:, 1])
    top2 = np.partition(cum, cum.shape[1] - 2, axis=1)[:, -2:]
    return top2[:, 1] - top2[:, 0]


def run_stage(
    inst: ProblemInstance,
    cluster_map: ClusterMap,
    alive: Set[int],
    action: int,
    gamma: float,
    env: ObservationSource,
    max_samples: Optional[int] = None,
    sample_budget: Optional[int] = None,
) -> StageOutcome:
    """
    Sample `action` until one contestant has L_ij >= gamma against all others.

    Observations are drawn in doubling blocks; the stopping index inside a
    block is located with a cumulative sum, so τ is the same as for a
    one-at-a-time loop over the same draws.
    """
    if gamma <= 0:
        raise UsageError("threshold gamma must be positive", f"gamma={gamma}")
    check_action(inst, action)
    contestants = sorted(representatives(cluster_map, alive, action))
    if len(contestants) < 2:
        raise UsageError(
            "a stage needs at least two contestants",
            f"action={action} puts alive={sorted(alive)} in one cluster",
        )

    spec = inst.actions[action]
    thetas = param_table(inst, action)[contestants, 0]
    limit = settings.max_samples_per_stage if max_samples is None else max_samples
    if limit < 1:
        raise UsageError("the per-stage sample limit must be at least 1", f"max_samples={limit}")
    state = StageState(alive=set(alive), contestants=contestants, action=action)
    block = settings.initial_block

    while True:
        if state.tau >= limit:
            raise StageOverrunError(
                f"stage exceeded {limit} samples without a winner (check epsilon)",
                {
                    "action": action,
                    "contestants": contestants,
                    "tau": state.tau,
                    "leading_gap": float(_leading_gap(state.totals[None, :])[0]),
                    "gamma": gamma,
                    "alive": sorted(alive),
                },
            )
        n = min(block, limit - state.tau)
        if sample_budget is not None:
            if state.tau >= sample_budget:
                raise SampleCapReached(cap=sample_budget, used=state.tau)
            n = min(n, sample_budget - state.tau)

        xs = env.observe_block(action, n)
        cum = state.totals + np.cumsum(distributions.log_likelihood_matrix(spec.family, thetas, xs), axis=0)
        hits = np.flatnonzero(_leading_gap(cum) >= gamma)
        if hits.size:
            used = int(hits[0]) + 1
            state.totals = cum[used - 1].copy()
            state.tau += used
            env.consume(used)
            break
        state.totals = cum[-1].copy()
        state.tau += n
        env.consume(n)
        block = min(block * 2, settings.max_block)

    winners = state.winners(gamma)
    if len(winners) != 1:
        raise WinnerUniquenessError(
            "stage ended without a unique winner",
            f"winners={winners}, antisymmetry error={state.antisymmetry_error()}",
        )
    return StageOutcome(winner=winners[0], tau=state.tau, state=state)


# ─────────────────────────────────────────────────────────────────────────────
# POLICY
# ─────────────────────────────────────────────────────────────────────────────

class EliminationPolicy:
    """Algorithm bound to one instance and configuration; reusable across trials."""

    def __init__(self, inst: ProblemInstance, cfg: PolicyConfig, cluster_map: Optional[ClusterMap] = None):
        self.inst = inst
        self.cfg = cfg
        self.cluster_map = cluster_map or get_cluster_map(inst, cfg.clustering)
        self.gamma = threshold(inst.hypotheses, cfg.delta)
        self._selection: Dict[FrozenSet[int], int] = {}

    def select_action(self, alive: Set[int]) -> int:
        key = frozenset(alive)
        if key not in self._selection:
            self._selection[key] = select_action(self.inst, self.cluster_map, alive)
        return self._selection[key]

    def _stage_action(self, stage: int, alive: Set[int]) -> int:
        override = self.cfg.action_override
        if override and stage < len(override):
            check_action(self.inst, override[stage])
            return override[stage]
        return self.select_action(alive)

    def run(
        self,
        true_h: int,
        rng: np.random.Generator,
        sample_cap: Optional[int] = None,
        on_stage: Optional[Callable[[StageRecord], None]] = None,
    ) -> RunResult:
        env = ObservationSource(self.inst, true_h, rng)
        alive = set(range(self.inst.hypotheses))
        stages: List[StageRecord] = []
        total = 0

        while len(alive) > 1:
            action = self._stage_action(len(stages), alive)
            budget = None if sample_cap is None else sample_cap - total
            outcome = run_stage(
                self.inst, self.cluster_map, alive, action, self.gamma, env,
                max_samples=self.cfg.max_samples_per_stage,
                sample_budget=budget,
            )
            survivors = alive & equiv(self.cluster_map, outcome.winner, action)
            # the winner's own cluster always survives and some other cluster never does
            assert outcome.winner in survivors and len(survivors) < len(alive)

            record = StageRecord(
                stage=len(stages),
                action=action,
                tau=outcome.tau,
                winner=outcome.winner,
                eliminated=len(alive) - len(survivors),
                alive_before=sorted(alive),
                alive_after=sorted(survivors),
            )
            stages.append(record)
            total += outcome.tau
            alive = survivors
            if on_stage:
                on_stage(record)
            if settings.debug:
                print(f"[Elimination] stage {record.stage}: action={action} tau={outcome.tau} "
                      f"winner={outcome.winner} alive={len(alive)}", file=sys.stderr)

        declared = next(iter(alive))
        return RunResult(
            algorithm=ALGORITHM_NAME,
            declared=declared,
            true_hypothesis=true_h,
            total_samples=total,
            correct=declared == true_h,
            stages=stages,
        )


def run(inst: ProblemInstance, cfg: PolicyConfig, true_h: int, rng: np.random.Generator,
        cluster_map: Optional[ClusterMap] = None) -> RunResult:
    """One trial of the elimination policy."""
    return EliminationPolicy(inst, cfg, cluster_map).run(true_h, rng)


# ─────────────────────────────────────────────────────────────────────────────
# DELAY AND RISK BOUNDS
# ─────────────────────────────────────────────────────────────────────────────

def delay_bounds(inst: ProblemInstance, cfg: PolicyConfig, report: AssumptionReport) -> DelayBounds:
    """(1/β)·γ <= E[N] <= max_a (H/ε_a)·γ; the upper side is reported, not asserted."""
    gamma = threshold(inst.hypotheses, cfg.delta)
    lower = gamma / report.beta if report.beta else None
    epsilons = [cfg.clustering.epsilon_for(a) for a in range(inst.num_actions)]
    if any(eps <= 0 for eps in epsilons):
        upper = math.inf
    else:
        upper = max(inst.hypotheses / eps * gamma for eps in epsilons)
    return DelayBounds(gamma=gamma, lower=lower, upper=upper)


def predicted_stage_delay(
    inst: ProblemInstance,
    cluster_map: ClusterMap,
    alive: Set[int],
    action: int,
    true_h: int,
    gamma: float,
) -> float:
    """
    Asymptotic mean stage length max_j γ/ΔD_ijk, with k the contestant of the
    true hypothesis' cluster and j ranging over the other contestants.
    Infinite when some ΔD_ijk <= 0.
    """
    if true_h not in alive:
        raise UsageError("the true hypothesis is no longer alive", f"true_h={true_h}")
    contestants = representatives(cluster_map, alive, action)
    k = min(set(alive) & equiv(cluster_map, true_h, action))
    spec = inst.actions[action]
    kl = distributions.kl_matrix(spec.family, param_table(inst, action)[:, 0])
    worst = 0.0
    for j in contestants - {k}:
        delta_d = kl[true_h, j] - kl[true_h, k]
        if delta_d <= 0:
            return math.inf
        worst = max(worst, gamma / delta_d)
    return worst


def abr_upper_bound(delta: float, hypotheses: int, epsilon: float) -> float:
    """(δ/H²)·(H/ε)·log₂(H/δ) + δ for ε > 0."""
    if epsilon <= 0:
        return math.inf
    return delta / hypotheses ** 2 * (hypotheses / epsilon) * threshold(hypotheses, delta) + delta
