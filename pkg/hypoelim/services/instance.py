"""
Problem environment: instance generation, assumption checks, hypothesis draws,
observations and JSON persistence.
"""
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from models.instance import ActionSpec, AssumptionReport, Family, Observation, ProblemInstance
from services import distributions
from services.cache import cache_get, cache_set, instance_fingerprint
from services.errors import InstanceFormatError, UsageError
from services.streams import check_seed

# Hypothesis-specific actions use this mean for their own hypothesis
SPECIFIC_MEAN = 3.0
# Exponential means are clamped away from zero at generation time
MIN_EXPONENTIAL_MEAN = 1e-6


# ─────────────────────────────────────────────────────────────────────────────
# GENERATION
# ─────────────────────────────────────────────────────────────────────────────

def generate_paper_instance(hypotheses: int, family: Family, seed: int) -> ProblemInstance:
    """
    Build the benchmark instance with H + 1 actions.

    Action a in 1..H has mean 3 under hypothesis a-1 and a mean drawn once,
    uniformly from [0, 1], under every other hypothesis. The last action has
    mean 0.5 + 0.01·i under hypothesis i. Priors are uniform.
    """
    if hypotheses < 2:
        raise UsageError("at least two hypotheses are required", f"hypotheses={hypotheses}")
    check_seed(seed)

    rng = np.random.default_rng(seed)
    actions: List[ActionSpec] = []

    for a in range(1, hypotheses + 1):
        means = rng.uniform(0.0, 1.0, size=hypotheses)
        means[a - 1] = SPECIFIC_MEAN
        actions.append(_action(family, means))

    last = 0.5 + 0.01 * np.arange(hypotheses)
    actions.append(_action(family, last))

    return ProblemInstance(
        hypotheses=hypotheses,
        priors=[1.0 / hypotheses] * hypotheses,
        actions=actions,
    )


def _action(family: Family, means: np.ndarray) -> ActionSpec:
    if family is Family.EXPONENTIAL_BY_MEAN:
        means = np.maximum(means, MIN_EXPONENTIAL_MEAN)
    return ActionSpec(family=family, params=[[float(m)] for m in means])


def param_table(inst: ProblemInstance, action: int) -> np.ndarray:
    """θ_i(a) for all hypotheses, shape (H, M_a)."""
    check_action(inst, action)
    return np.asarray(inst.actions[action].params, dtype=float)


def check_action(inst: ProblemInstance, action: int) -> None:
    if not 0 <= action < inst.num_actions:
        raise UsageError("action index out of range", f"action={action}, |A|={inst.num_actions}")


def check_hypothesis(inst: ProblemInstance, h: int) -> None:
    if not 0 <= h < inst.hypotheses:
        raise UsageError("hypothesis index out of range", f"h={h}, H={inst.hypotheses}")


# ─────────────────────────────────────────────────────────────────────────────
# ASSUMPTIONS
# ─────────────────────────────────────────────────────────────────────────────

def verify_assumptions(inst: ProblemInstance, alpha_floor: float = 0.0) -> AssumptionReport:
    """
    Scan every action and ordered pair for separation (A1), the KLD/L2
    sandwich (A2) and validity (A3). Always returns a report.
    """
    H = inst.hypotheses
    positive: List[float] = []
    ratios: List[float] = []
    beta = 0.0
    separated = np.zeros((H, H), dtype=bool)
    uninformative: List[int] = []

    for a, action in enumerate(inst.actions):
        params = np.asarray(action.params, dtype=float)
        kl = distributions.kl_matrix(action.family, params[:, 0])
        sq = distributions.squared_distance_matrix(params)
        off_diag = ~np.eye(H, dtype=bool)

        nonzero = (kl > 0) & off_diag
        if not nonzero.any():
            uninformative.append(a)
            continue

        positive.append(float(kl[nonzero].min()))
        beta = max(beta, float(kl[off_diag].max()))
        ratios.extend((sq[nonzero] / kl[nonzero]).tolist())
        separated |= nonzero | nonzero.T

    violating: List[Tuple[int, int]] = [
        (i, j) for i in range(H) for j in range(i + 1, H) if not separated[i, j]
    ]
    alpha = min(positive) if positive else None

    return AssumptionReport(
        alpha=alpha,
        beta=beta if positive else None,
        c1=min(ratios) if ratios else None,
        c2=max(ratios) if ratios else None,
        a1_holds=alpha is not None and alpha > alpha_floor and not uninformative,
        a3_holds=not violating,
        uninformative_actions=uninformative,
        violating_pairs=violating,
    )


def cached_assumptions(inst: ProblemInstance) -> AssumptionReport:
    key = instance_fingerprint(inst)
    report = cache_get("assumptions", key)
    if report is None:
        report = verify_assumptions(inst)
        cache_set("assumptions", key, report)
    return report


# ─────────────────────────────────────────────────────────────────────────────
# ENVIRONMENT
# ─────────────────────────────────────────────────────────────────────────────

def draw_true_hypothesis(inst: ProblemInstance, rng: np.random.Generator) -> int:
    """Index i with probability π_i."""
    return int(rng.choice(inst.hypotheses, p=np.asarray(inst.priors)))


def observe(inst: ProblemInstance, true_h: int, action: int, rng: np.random.Generator,
            time_index: int = 1) -> Observation:
    """One sample under `action` when `true_h` is the underlying hypothesis."""
    check_hypothesis(inst, true_h)
    check_action(inst, action)
    spec = inst.actions[action]
    value = distributions.sample(spec.family, spec.params[true_h], rng)
    return Observation(value=value, action=action, time_index=time_index)


class ObservationSource:
    """
    Sample source for one trial: the true hypothesis and its stream.

    Keeps the time index n. Blocks are drawn for vectorized stage loops; a
    stage that stops inside a block gives the unused tail back by calling
    `consume` with the number it actually used.
    """

    def __init__(self, inst: ProblemInstance, true_h: int, rng: np.random.Generator):
        check_hypothesis(inst, true_h)
        self.inst = inst
        self.true_h = true_h
        self.rng = rng
        self.time_index = 0

    def observe(self, action: int) -> Observation:
        self.time_index += 1
        return observe(self.inst, self.true_h, action, self.rng, self.time_index)

    def observe_block(self, action: int, n: int) -> np.ndarray:
        check_action(self.inst, action)
        spec = self.inst.actions[action]
        return distributions.sample_block(spec.family, spec.params[self.true_h], self.rng, n)

    def consume(self, n: int) -> None:
        self.time_index += n


# ─────────────────────────────────────────────────────────────────────────────
# PERSISTENCE
# ─────────────────────────────────────────────────────────────────────────────

def dump_instance(inst: ProblemInstance) -> str:
    return inst.model_dump_json(indent=2)


def save_instance(inst: ProblemInstance, path: str | Path, force: bool = True) -> Path:
    target = Path(path)
    if target.exists() and not force:
        raise UsageError(f"refusing to overwrite {target}", "pass --force to overwrite")
    try:
        target.write_text(dump_instance(inst) + "\n", encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot write instance to {target}", str(e))
    print(f"[Instance] Saved H={inst.hypotheses}, |A|={inst.num_actions} to {target}", file=sys.stderr)
    return target


def parse_instance(text: str, source: Optional[str] = None) -> ProblemInstance:
    where = source or "<string>"
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{where} is not valid JSON", str(e))
    try:
        return ProblemInstance.model_validate(payload)
    except ValidationError as e:
        raise InstanceFormatError(f"{where} violates the instance schema", str(e))


def load_instance(path: str | Path) -> ProblemInstance:
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read instance {source}", str(e))
    return parse_instance(text, str(source))
