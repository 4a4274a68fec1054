"""
In-process cache for per-instance preprocessing results.

Cluster maps and assumption reports depend only on the (immutable) instance
and the clustering configuration, so they are computed once per process and
reused by every trial. Uses cachetools.LRUCache pools keyed by the instance
fingerprint.
"""
import hashlib
import threading
from cachetools import LRUCache

from config import settings
from models.instance import ProblemInstance


# Thread-safe lock for cache operations
_lock = threading.Lock()

# ─────────────────────────────────────────────────────────────────────────────
# CACHE POOLS
# ─────────────────────────────────────────────────────────────────────────────

# Cluster maps: (fingerprint, epsilons, min_pts) -> ClusterMap
_clusters_cache = LRUCache(maxsize=settings.cluster_cache_size)

# Assumption reports: fingerprint -> AssumptionReport
_assumptions_cache = LRUCache(maxsize=settings.cluster_cache_size)

_pools = {
    "clusters": _clusters_cache,
    "assumptions": _assumptions_cache,
}


# ─────────────────────────────────────────────────────────────────────────────
# PUBLIC API
# ─────────────────────────────────────────────────────────────────────────────

def instance_fingerprint(inst: ProblemInstance) -> str:
    """Stable key for an instance: hash of its canonical JSON."""
    return hashlib.sha256(inst.model_dump_json().encode()).hexdigest()[:32]


def cache_get(pool: str, key):
    """
    Get a value from a cache pool.
    Returns None if not found.
    """
    cache = _pools[pool]
    with _lock:
        return cache.get(key)


def cache_set(pool: str, key, value):
    """Store a value in a cache pool."""
    cache = _pools[pool]
    with _lock:
        cache[key] = value


def cache_clear(pool: str = ""):
    """Clear one pool, or all pools when no name is given."""
    with _lock:
        for name, cache in _pools.items():
            if not pool or name == pool:
                cache.clear()
