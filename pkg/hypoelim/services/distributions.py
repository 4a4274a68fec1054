"""
Observation-distribution families: log-likelihoods, sampling, KL divergence
and parameter-space distances.

All log quantities are in bits. Closed forms derived in nats are divided by
ln 2. Parameters are vectors of dimension M_a = 1 for both families: the mean
of a unit-variance normal, or the mean of an exponential (rate = 1/mean).
"""
import math
from typing import Sequence

import numpy as np
from scipy import stats

from models.instance import Family
from services.errors import ParameterDomainError, SupportError, UsageError

LN2 = math.log(2.0)
_HALF_LOG2_2PI = 0.5 * math.log2(2.0 * math.pi)


# ─────────────────────────────────────────────────────────────────────────────
# VALIDATION
# ─────────────────────────────────────────────────────────────────────────────

def _as_vector(theta: Sequence[float]) -> np.ndarray:
    return np.asarray(theta, dtype=float).reshape(-1)


def check_theta(family: Family, theta: Sequence[float]) -> np.ndarray:
    """Return θ as a vector, raising ParameterDomainError when it is invalid."""
    vec = _as_vector(theta)
    if vec.size != family.param_dimension:
        raise ParameterDomainError(
            f"{family.value} parameters have dimension {family.param_dimension}",
            f"got {vec.size} components",
        )
    if not np.all(np.isfinite(vec)):
        raise ParameterDomainError(f"{family.value} parameter must be finite", f"theta={vec.tolist()}")
    if family is Family.EXPONENTIAL_BY_MEAN and np.any(vec <= 0):
        raise ParameterDomainError("exponential mean must be positive", f"theta={vec.tolist()}")
    return vec


def _check_support(family: Family, x) -> None:
    if family is Family.EXPONENTIAL_BY_MEAN and np.any(np.asarray(x) < 0):
        raise SupportError(
            "observation outside the exponential support",
            "negative sample received; instance and samples do not match",
        )


# ─────────────────────────────────────────────────────────────────────────────
# SINGLE-SAMPLE OPERATIONS
# ─────────────────────────────────────────────────────────────────────────────

def log_likelihood(family: Family, theta: Sequence[float], x: float) -> float:
    """log₂ f(x; θ)."""
    vec = check_theta(family, theta)
    _check_support(family, x)
    if family is Family.NORMAL_UNIT_VARIANCE:
        return float(stats.norm.logpdf(x, loc=vec[0], scale=1.0) / LN2)
    return float(stats.expon.logpdf(x, scale=vec[0]) / LN2)


def sample(family: Family, theta: Sequence[float], rng: np.random.Generator) -> float:
    """One draw from f(·; θ)."""
    return float(sample_block(family, theta, rng, 1)[0])


def kl_divergence(family: Family, theta_i: Sequence[float], theta_j: Sequence[float],
                  family_j: Family | None = None) -> float:
    """
    Closed-form D(f(·; θ_i) || f(·; θ_j)) in bits.

    Both parameter vectors come from one ActionSpec, which has a single family,
    so callers inside the simulator never mix families. Callers holding
    parameters from two sources pass `family_j`; a mismatch is a UsageError.
    """
    if family_j is not None and family_j is not family:
        raise UsageError("KL divergence requires parameters of one family",
                         f"{family.value} vs {family_j.value}")
    vi = check_theta(family, theta_i)
    vj = check_theta(family, theta_j)
    return float(kl_matrix(family, np.array([vi[0], vj[0]]))[0, 1])


def squared_param_distance(theta_i: Sequence[float], theta_j: Sequence[float]) -> float:
    """||θ_i - θ_j||²."""
    vi = _as_vector(theta_i)
    vj = _as_vector(theta_j)
    if vi.size != vj.size:
        raise UsageError("parameter vectors differ in dimension", f"{vi.size} vs {vj.size}")
    diff = vi - vj
    return float(np.dot(diff, diff))


# ─────────────────────────────────────────────────────────────────────────────
# VECTORIZED HELPERS (used by the stage loops)
# ─────────────────────────────────────────────────────────────────────────────

def sample_block(family: Family, theta: Sequence[float], rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. draws from f(·; θ)."""
    vec = check_theta(family, theta)
    if family is Family.NORMAL_UNIT_VARIANCE:
        return rng.normal(loc=vec[0], scale=1.0, size=n)
    return rng.exponential(scale=vec[0], size=n)


def log_likelihood_matrix(family: Family, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Per-sample log₂-likelihoods, shape (len(xs), len(thetas)).

    `thetas` holds one scalar parameter per hypothesis.
    """
    _check_support(family, xs)
    t = np.asarray(thetas, dtype=float).reshape(1, -1)
    x = np.asarray(xs, dtype=float).reshape(-1, 1)
    if family is Family.NORMAL_UNIT_VARIANCE:
        return -0.5 * (x - t) ** 2 / LN2 - _HALF_LOG2_2PI
    return (-np.log(t) - x / t) / LN2


def log_likelihood_totals(family: Family, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Σ_t log₂ f(x_t; θ_h) for every hypothesis, from sufficient statistics."""
    _check_support(family, xs)
    t = np.asarray(thetas, dtype=float)
    n = xs.size
    sum_x = float(np.sum(xs))
    if family is Family.NORMAL_UNIT_VARIANCE:
        sum_x2 = float(np.dot(xs, xs))
        return (-0.5 * (sum_x2 - 2.0 * t * sum_x + n * t ** 2)) / LN2 - n * _HALF_LOG2_2PI
    return (-n * np.log(t) - sum_x / t) / LN2


def kl_matrix(family: Family, thetas: np.ndarray) -> np.ndarray:
    """D(H_i || H_j) in bits for all ordered pairs of scalar parameters."""
    t = np.asarray(thetas, dtype=float).reshape(-1)
    ti = t[:, None]
    tj = t[None, :]
    if family is Family.NORMAL_UNIT_VARIANCE:
        kl = (ti - tj) ** 2 / (2.0 * LN2)
    else:
        kl = (np.log(tj / ti) + ti / tj - 1.0) / LN2
        kl = np.where(ti == tj, 0.0, np.maximum(kl, 0.0))
    return kl


def squared_distance_matrix(thetas: np.ndarray) -> np.ndarray:
    """||θ_i - θ_j||² for all pairs; `thetas` has shape (H, M)."""
    t = np.asarray(thetas, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    diff = t[:, None, :] - t[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
