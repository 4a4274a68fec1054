"""
Shared fixtures: benchmark instances, small hand-built instances and a
scripted observation source.
"""
from typing import List, Sequence

import numpy as np
import pytest

from models.instance import ActionSpec, Family, ProblemInstance
from services.cache import cache_clear
from services.instance import generate_paper_instance

BENCHMARK_SEED = 42


def make_instance(actions: Sequence[Sequence[float]], family: Family = Family.NORMAL_UNIT_VARIANCE,
                  priors: Sequence[float] = None) -> ProblemInstance:
    """Instance from one list of scalar means per action."""
    H = len(actions[0])
    return ProblemInstance(
        hypotheses=H,
        priors=list(priors) if priors else [1.0 / H] * H,
        actions=[ActionSpec(family=family, params=[[float(m)] for m in means]) for means in actions],
    )


class ScriptedSource:
    """Observation source that returns one constant value and records consumption."""

    def __init__(self, value: float):
        self.value = value
        self.time_index = 0
        self.blocks: List[int] = []

    def observe_block(self, action: int, n: int) -> np.ndarray:
        self.blocks.append(n)
        return np.full(n, self.value)

    def consume(self, n: int) -> None:
        self.time_index += n


@pytest.fixture(autouse=True)
def _fresh_cache():
    cache_clear()
    yield
    cache_clear()


@pytest.fixture(scope="session")
def benchmark_normal() -> ProblemInstance:
    return generate_paper_instance(16, Family.NORMAL_UNIT_VARIANCE, BENCHMARK_SEED)


@pytest.fixture(scope="session")
def benchmark_exponential() -> ProblemInstance:
    return generate_paper_instance(16, Family.EXPONENTIAL_BY_MEAN, BENCHMARK_SEED)


@pytest.fixture
def build_instance():
    return make_instance


@pytest.fixture
def scripted_source():
    return ScriptedSource


@pytest.fixture
def two_point() -> ProblemInstance:
    """Two hypotheses, one action, means 0 and 3."""
    return make_instance([[0.0, 3.0]])


@pytest.fixture
def spread_instance() -> ProblemInstance:
    """Six well-separated hypotheses except the close pair 0/1, one action."""
    return make_instance([[0.0, 1.0, 5.0, 10.0, 15.0, 20.0]])


@pytest.fixture
def small_multi_action() -> ProblemInstance:
    """Four hypotheses, three actions, each separating a different pair first."""
    return make_instance([
        [0.0, 0.0, 3.0, 3.0],
        [0.0, 3.0, 0.0, 3.0],
        [0.5, 0.6, 0.7, 0.8],
    ])
