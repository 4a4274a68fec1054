"""
Random streams.

A stream is a numpy Generator. Trial streams are derived from a tuple of
integer keys (master seed, algorithm id, δ index, trial index) through
SeedSequence, so any cell or trial can be replayed on its own and in any
order.
"""
from typing import Tuple

import numpy as np
from numpy.random import PCG64, SeedSequence

from services.errors import UsageError


def check_seed(seed: int) -> int:
    """SeedSequence only takes non-negative integers."""
    if seed < 0:
        raise UsageError("seed must be a non-negative integer", f"seed={seed}")
    return int(seed)


def make_stream(seed: int) -> np.random.Generator:
    """Stream for a single seeded run (CLI --seed)."""
    return np.random.Generator(PCG64(SeedSequence(check_seed(seed))))


def trial_seed_words(master_seed: int, algorithm_id: int, delta_index: int, trial: int) -> Tuple[int, int, int, int]:
    return (int(master_seed), int(algorithm_id), int(delta_index), int(trial))


def derive_stream(*keys: int) -> np.random.Generator:
    """Counter-style derivation: the same keys always give the same stream."""
    if any(k < 0 for k in keys):
        raise UsageError("stream keys must be non-negative", f"keys={keys}")
    return np.random.Generator(PCG64(SeedSequence(list(keys))))
