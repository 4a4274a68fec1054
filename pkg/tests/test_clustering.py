"""
Tests for proximity clustering, cluster queries and ε certification.
"""
import numpy as np
import pytest

from models.policy import ClusteringConfig
from services.clustering import (
    build_cluster_map, cluster_labels, equiv, get_cluster_map, representatives,
    validate_all, validate_epsilon,
)
from services.errors import UsageError


def closure_oracle(means, epsilon):
    """Transitive closure of 'squared distance <= ε' by repeated merging."""
    H = len(means)
    label = list(range(H))
    changed = True
    while changed:
        changed = False
        for i in range(H):
            for j in range(H):
                d = means[i] - means[j]
                if d * d <= epsilon and label[i] != label[j]:
                    low = min(label[i], label[j])
                    high = max(label[i], label[j])
                    label = [low if l == high else l for l in label]
                    changed = True
    order = {}
    return [order.setdefault(l, len(order)) for l in label]


class TestClusterLabels:
    def test_matches_closure_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            H = int(rng.integers(2, 13))
            # a coarse grid makes exact ties and chains common
            means = rng.integers(0, 20, size=H) / 10.0
            epsilon = float(rng.choice([0.0, 0.01, 0.05, 0.1, 0.5]))
            labels = cluster_labels(means[:, None], epsilon)
            assert labels == closure_oracle(means.tolist(), epsilon)

            for i in range(H):
                for j in range(H):
                    if labels[i] != labels[j]:
                        d = means[i] - means[j]
                        assert d * d > epsilon

    def test_zero_epsilon_is_exact_equality(self):
        assert cluster_labels(np.array([[0.3], [0.1], [0.3], [0.2]]), 0.0) == [0, 1, 0, 2]

    def test_chaining(self):
        # 0 - 0.5 - 1.0 chain at ε = 0.25; 1.6 is too far
        assert cluster_labels(np.array([[0.0], [0.5], [1.0], [1.6]]), 0.25) == [0, 0, 0, 1]

    def test_coarsens_with_epsilon(self):
        rng = np.random.default_rng(5)
        params = rng.uniform(0, 1, size=(12, 1))
        fine = cluster_labels(params, 0.001)
        coarse = cluster_labels(params, 0.01)
        for i in range(12):
            for j in range(12):
                if fine[i] == fine[j]:
                    assert coarse[i] == coarse[j]

    @pytest.mark.parametrize("min_pts,expected", [
        (2, [0, 0, 0, 1]),
        (3, [0, 0, 0, 1]),
        (4, [0, 1, 2, 3]),
    ])
    def test_min_pts_noise_becomes_singletons(self, min_pts, expected):
        params = np.array([[0.0], [0.1], [0.2], [5.0]])
        assert cluster_labels(params, 0.02, min_pts=min_pts) == expected


class TestQueries:
    @pytest.fixture
    def cluster_map(self, small_multi_action):
        return build_cluster_map(small_multi_action, ClusteringConfig())

    def test_equiv(self, cluster_map):
        assert equiv(cluster_map, 0, 0) == {0, 1}
        assert equiv(cluster_map, 0, 1) == {0, 2}
        assert equiv(cluster_map, 3, 2) == {3}

    def test_representatives(self, cluster_map):
        assert representatives(cluster_map, {0, 1, 2, 3}, 0) == {0, 2}
        assert representatives(cluster_map, {1, 3}, 0) == {1, 3}
        assert representatives(cluster_map, {1, 2, 3}, 1) == {1, 2}

    def test_empty_alive(self, cluster_map):
        with pytest.raises(UsageError):
            representatives(cluster_map, set(), 0)

    def test_out_of_range(self, cluster_map):
        with pytest.raises(UsageError):
            equiv(cluster_map, 0, 7)
        with pytest.raises(UsageError):
            representatives(cluster_map, {9}, 0)

    def test_per_action_epsilon(self, small_multi_action):
        cfg = ClusteringConfig(epsilon={2: 0.05})
        cluster_map = build_cluster_map(small_multi_action, cfg)
        assert cluster_map.epsilon == [0.0, 0.0, 0.05]
        assert cluster_map.clusters(2) == [[0, 1, 2, 3]]
        assert cluster_map.clusters(0) == [[0, 1], [2, 3]]

    def test_cluster_map_is_cached(self, small_multi_action):
        cfg = ClusteringConfig.uniform(0.1)
        assert get_cluster_map(small_multi_action, cfg) is get_cluster_map(small_multi_action, cfg)


class TestEpsilonValidation:
    def test_certified_split(self, build_instance):
        inst = build_instance([[0.0, 0.1, 3.0]])
        check = validate_epsilon(inst, build_cluster_map(inst, ClusteringConfig.uniform(0.05)), 0)
        assert check.certified
        assert check.margin > 0

    def test_chained_cluster_is_not_certified(self, build_instance):
        # hypothesis 2 sits closer to the outside hypothesis 3 than to its representative 0
        inst = build_instance([[0.0, 0.5, 1.0, 1.6]])
        check = validate_epsilon(inst, build_cluster_map(inst, ClusteringConfig.uniform(0.25)), 0)
        assert check.margin < 0
        assert not check.certified

    def test_single_cluster_is_uninformative(self, build_instance):
        inst = build_instance([[0.0, 0.1, 0.2]])
        check = validate_epsilon(inst, build_cluster_map(inst, ClusteringConfig.uniform(10.0)), 0)
        assert check.uninformative
        assert check.margin is None

    def test_zero_epsilon_always_certified(self, benchmark_normal):
        checks = validate_all(benchmark_normal, build_cluster_map(benchmark_normal, ClusteringConfig()))
        assert len(checks) == benchmark_normal.num_actions
        assert all(c.certified for c in checks)
