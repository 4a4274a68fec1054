"""
Per-action proximity clustering of hypothesis parameters.

Two parameters are neighbours under action a when their squared distance is
at most ε_a. With min_pts = 1 the DBSCAN clusters are exactly the connected
components of that neighbourhood graph (computed with scipy's
connected_components, which also handles ε_a = 0 as exact equality). For
min_pts > 1 scikit-learn's DBSCAN runs on the precomputed squared distances
and noise points become singleton clusters, so the result is always a
partition.
"""
import sys
from typing import Iterable, List, Set

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import DBSCAN

from config import settings
from models.instance import ProblemInstance
from models.policy import ClusteringConfig, ClusterMap, EpsilonValidation
from services import distributions
from services.cache import cache_get, cache_set, instance_fingerprint
from services.errors import UsageError

# sklearn requires eps > 0; below this, neighbourhoods are exact duplicates
_MIN_SKLEARN_EPS = 1e-300


# ─────────────────────────────────────────────────────────────────────────────
# BUILD
# ─────────────────────────────────────────────────────────────────────────────

def _canonical(labels: np.ndarray) -> List[int]:
    """Relabel so cluster ids appear in order of their smallest member."""
    mapping = {}
    out = []
    for label in labels.tolist():
        if label not in mapping:
            mapping[label] = len(mapping)
        out.append(mapping[label])
    return out


def cluster_labels(params: np.ndarray, epsilon: float, min_pts: int = 1) -> List[int]:
    """Cluster one action's parameter table, shape (H, M)."""
    sq = distributions.squared_distance_matrix(params)
    if min_pts == 1:
        adjacency = csr_matrix(sq <= epsilon)
        _, labels = connected_components(adjacency, directed=False)
        return _canonical(labels)

    model = DBSCAN(eps=max(epsilon, _MIN_SKLEARN_EPS), min_samples=min_pts, metric="precomputed")
    labels = model.fit_predict(sq)
    next_label = labels.max() + 1 if labels.size else 0
    for i in np.flatnonzero(labels == -1):
        labels[i] = next_label
        next_label += 1
    return _canonical(labels)


def build_cluster_map(inst: ProblemInstance, cfg: ClusteringConfig) -> ClusterMap:
    """Cluster every action of the instance (preprocessing step)."""
    labels = []
    epsilons = []
    for a, action in enumerate(inst.actions):
        eps = cfg.epsilon_for(a)
        labels.append(cluster_labels(np.asarray(action.params, dtype=float), eps, cfg.min_pts))
        epsilons.append(eps)
    return ClusterMap(labels=labels, epsilon=epsilons, min_pts=cfg.min_pts)


def get_cluster_map(inst: ProblemInstance, cfg: ClusteringConfig) -> ClusterMap:
    """build_cluster_map, cached per (instance, ε, min_pts)."""
    key = (instance_fingerprint(inst), cfg.cache_key(inst.num_actions))
    cluster_map = cache_get("clusters", key)
    if cluster_map is None:
        cluster_map = build_cluster_map(inst, cfg)
        cache_set("clusters", key, cluster_map)
        if settings.debug:
            counts = [len(set(l)) for l in cluster_map.labels]
            print(f"[Clustering] Built map, clusters per action: {counts}", file=sys.stderr)
    return cluster_map


# ─────────────────────────────────────────────────────────────────────────────
# QUERIES
# ─────────────────────────────────────────────────────────────────────────────

def _check(cluster_map: ClusterMap, h: int, a: int) -> None:
    if not 0 <= a < cluster_map.num_actions:
        raise UsageError("action index out of range", f"action={a}")
    if not 0 <= h < cluster_map.num_hypotheses:
        raise UsageError("hypothesis index out of range", f"h={h}")


def equiv(cluster_map: ClusterMap, i: int, a: int) -> Set[int]:
    """All hypotheses in i's cluster under action a (always contains i)."""
    _check(cluster_map, i, a)
    labels = cluster_map.labels[a]
    return {k for k, label in enumerate(labels) if label == labels[i]}


def representatives(cluster_map: ClusterMap, alive: Iterable[int], a: int) -> Set[int]:
    """The smallest alive index of every cluster that intersects `alive`."""
    alive = sorted(set(alive))
    if not alive:
        raise UsageError("representatives of an empty alive set are undefined")
    for h in alive:
        _check(cluster_map, h, a)
    labels = cluster_map.labels[a]
    chosen = {}
    for h in alive:
        chosen.setdefault(labels[h], h)
    return set(chosen.values())


# ─────────────────────────────────────────────────────────────────────────────
# ε DIAGNOSTICS
# ─────────────────────────────────────────────────────────────────────────────

def validate_epsilon(inst: ProblemInstance, cluster_map: ClusterMap, a: int) -> EpsilonValidation:
    """
    Minimum ΔD_ijk(a) = D(H_i||H_j) - D(H_i||H_k) over every hypothesis i, its
    cluster representative k and every j outside its cluster. A positive
    margin certifies ε_a; a single cluster makes the action uninformative.
    """
    _check(cluster_map, 0, a)
    action = inst.actions[a]
    kl = distributions.kl_matrix(action.family, np.asarray(action.params, dtype=float)[:, 0])
    labels = np.asarray(cluster_map.labels[a])
    H = labels.size

    margin = None
    for i in range(H):
        k = min(np.flatnonzero(labels == labels[i]))
        outside = np.flatnonzero(labels != labels[i])
        if outside.size == 0:
            continue
        m = float(np.min(kl[i, outside]) - kl[i, k])
        margin = m if margin is None else min(margin, m)

    return EpsilonValidation(
        action=a,
        epsilon=cluster_map.epsilon[a],
        margin=margin,
        uninformative=margin is None,
    )


def validate_all(inst: ProblemInstance, cluster_map: ClusterMap) -> List[EpsilonValidation]:
    return [validate_epsilon(inst, cluster_map, a) for a in range(inst.num_actions)]
