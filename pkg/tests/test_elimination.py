"""
Tests for the elimination policy: action selection, stages, full runs and the
delay/risk bounds.
"""
import math

import numpy as np
import pytest

from config import settings
from models.policy import ClusteringConfig, PolicyConfig, StageState
from services.clustering import build_cluster_map
from services.elimination import (
    EliminationPolicy, abr_upper_bound, delay_bounds, predicted_stage_delay, run,
    run_stage, select_action, separation_scores, threshold,
)
from services.errors import (
    NoSeparatingActionError, SampleCapReached, StageOverrunError, UsageError,
)
from services.instance import ObservationSource, verify_assumptions
from services.streams import make_stream

LN2 = math.log(2.0)


def exhaustive_argmax(inst, cluster_map, alive):
    """Plain-loop version of the selection rule."""
    best, best_score = None, None
    for a in range(inst.num_actions):
        labels = cluster_map.labels[a]
        gaps = [
            (inst.actions[a].params[i][0] - inst.actions[a].params[j][0]) ** 2
            for i in alive for j in alive if labels[i] != labels[j]
        ]
        if not gaps:
            continue
        if best is None or min(gaps) > best_score:
            best, best_score = a, min(gaps)
    return best


class TestThreshold:
    def test_value(self):
        assert threshold(16, 1e-3) == pytest.approx(math.log2(16_000))

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.5, 2.0])
    def test_rejects_delta(self, delta):
        with pytest.raises(UsageError):
            threshold(16, delta)


class TestSelectAction:
    def test_larger_gap_wins(self, build_instance):
        inst = build_instance([[0.0, 0.2], [0.0, 3.0]])
        assert select_action(inst, build_cluster_map(inst, ClusteringConfig()), {0, 1}) == 1

    def test_ties_go_to_smallest_index(self, build_instance):
        inst = build_instance([[0.0, 1.0], [5.0, 6.0]])
        assert select_action(inst, build_cluster_map(inst, ClusteringConfig()), {0, 1}) == 0

    @pytest.mark.parametrize("epsilon", [0.0, 0.1])
    def test_benchmark_instance_matches_exhaustive_argmax(self, benchmark_normal, epsilon):
        cluster_map = build_cluster_map(benchmark_normal, ClusteringConfig.uniform(epsilon))
        alive = set(range(16))
        assert select_action(benchmark_normal, cluster_map, alive) == exhaustive_argmax(benchmark_normal, cluster_map, alive)

        subset = {2, 5, 9, 14}
        assert select_action(benchmark_normal, cluster_map, subset) == exhaustive_argmax(benchmark_normal, cluster_map, subset)

    def test_clustered_min_ignores_same_cluster_pairs(self, benchmark_normal):
        cluster_map = build_cluster_map(benchmark_normal, ClusteringConfig.uniform(0.1))
        scores = separation_scores(benchmark_normal, cluster_map, set(range(16)))
        # action 0 has mean 3 for hypothesis 0 and [0, 1] means elsewhere
        assert scores[0] is not None and scores[0] > 0.1

    def test_single_cluster_everywhere(self, benchmark_normal):
        cluster_map = build_cluster_map(benchmark_normal, ClusteringConfig.uniform(100.0))
        with pytest.raises(NoSeparatingActionError):
            select_action(benchmark_normal, cluster_map, set(range(16)))

    def test_needs_two_alive(self, two_point):
        with pytest.raises(UsageError):
            select_action(two_point, build_cluster_map(two_point, ClusteringConfig()), {0})


class TestRunStage:
    def test_two_contestant_wald_stop(self, two_point, scripted_source):
        # x = 3 adds 9 / (2 ln 2) ≈ 6.49 bits per sample in favour of hypothesis 1
        env = scripted_source(3.0)
        outcome = run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0, env)
        assert outcome.winner == 1
        assert outcome.tau == 2
        assert env.time_index == 2

    def test_state_is_antisymmetric(self, two_point):
        env = ObservationSource(two_point, 0, make_stream(1))
        outcome = run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0, env)
        llr = outcome.state.llr
        assert outcome.state.antisymmetry_error() <= 1e-9
        assert np.all(np.diag(llr) == 0)
        assert outcome.state.winners(10.0) == [outcome.winner]

    def test_overrun(self, two_point, scripted_source):
        # x = 1.5 is equally likely under both means; the LLR never moves
        with pytest.raises(StageOverrunError) as info:
            run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0,
                      scripted_source(1.5), max_samples=100)
        assert info.value.exit_code == 3
        assert info.value.diagnostics["tau"] == 100
        assert info.value.diagnostics["contestants"] == [0, 1]

    def test_sample_budget(self, two_point, scripted_source):
        with pytest.raises(SampleCapReached) as info:
            run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0,
                      scripted_source(1.5), sample_budget=50)
        assert info.value.used == 50

    def test_rejects_non_positive_gamma(self, two_point, scripted_source):
        with pytest.raises(UsageError):
            run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 0.0,
                      scripted_source(3.0))

    def test_rejects_zero_sample_limit(self, two_point, scripted_source):
        env = scripted_source(3.0)
        with pytest.raises(UsageError):
            run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0,
                      env, max_samples=0)
        assert env.blocks == []

    def test_rejects_single_contestant(self, two_point, scripted_source):
        cluster_map = build_cluster_map(two_point, ClusteringConfig.uniform(10.0))
        with pytest.raises(UsageError):
            run_stage(two_point, cluster_map, {0, 1}, 0, 5.0, scripted_source(3.0))

    def test_block_size_doubles(self, two_point, scripted_source):
        env = scripted_source(1.5)
        with pytest.raises(StageOverrunError):
            run_stage(two_point, build_cluster_map(two_point, ClusteringConfig()), {0, 1}, 0, 10.0,
                      env, max_samples=1000)
        assert env.blocks[:3] == [settings.initial_block, 2 * settings.initial_block, 4 * settings.initial_block]
        assert sum(env.blocks) == 1000

    def test_small_sample_regime_mean_tau(self, two_point):
        """Means {0, 3}, truth 3, γ = log₂(16/10⁻³): γ/KLD ≈ 2.15."""
        gamma = threshold(16, 1e-3)
        cluster_map = build_cluster_map(two_point, ClusteringConfig())
        rng = make_stream(99)
        taus = []
        for _ in range(10_000):
            env = ObservationSource(two_point, 1, rng)
            taus.append(run_stage(two_point, cluster_map, {0, 1}, 0, gamma, env).tau)
        assert 1.0 <= np.mean(taus) <= 6.0


class TestStageState:
    def test_unique_winner(self):
        state = StageState(alive={0, 1, 2}, contestants=[0, 1, 2], action=0, totals=np.array([20.0, 0.0, 5.0]))
        assert state.winners(10.0) == [0]
        assert state.winners(16.0) == []
        assert state.antisymmetry_error() == 0.0


class TestRun:
    def test_two_hypotheses_single_stage(self, two_point):
        result = run(two_point, PolicyConfig(delta=1e-3), 0, make_stream(3))
        assert len(result.stages) == 1
        assert result.declared in (0, 1)
        assert result.total_samples == result.stages[0].tau

    @pytest.mark.parametrize("epsilon", [0.0, 0.1])
    def test_alive_shrinks_every_stage(self, benchmark_normal, epsilon):
        policy = EliminationPolicy(benchmark_normal, PolicyConfig(delta=1e-2, clustering=ClusteringConfig.uniform(epsilon)))
        for seed in range(5):
            result = policy.run(seed % 16, make_stream(seed))
            assert 1 <= len(result.stages) <= benchmark_normal.hypotheses - 1
            for record in result.stages:
                assert set(record.alive_after) < set(record.alive_before)
                assert record.winner in record.alive_after
                assert record.eliminated == len(record.alive_before) - len(record.alive_after)
            assert result.stages[-1].alive_after == [result.declared]
            assert result.total_samples == sum(r.tau for r in result.stages)

    def test_same_seed_same_result(self, benchmark_normal):
        cfg = PolicyConfig(delta=1e-3, clustering=ClusteringConfig.uniform(0.1))
        assert run(benchmark_normal, cfg, 4, make_stream(10)) == run(benchmark_normal, cfg, 4, make_stream(10))

    def test_on_stage_callback(self, small_multi_action):
        seen = []
        policy = EliminationPolicy(small_multi_action, PolicyConfig(delta=1e-2))
        result = policy.run(2, make_stream(0), on_stage=seen.append)
        assert seen == result.stages

    def test_action_override_then_fallback(self, small_multi_action):
        cfg = PolicyConfig(delta=1e-2, action_override=[1])
        result = EliminationPolicy(small_multi_action, cfg).run(0, make_stream(1))
        assert result.stages[0].action == 1
        # after action 1 splits {0,2} from {1,3}, selection takes over
        if len(result.stages) > 1:
            assert result.stages[1].action == 0

    def test_sample_cap(self, benchmark_normal):
        policy = EliminationPolicy(benchmark_normal, PolicyConfig(delta=1e-3))
        with pytest.raises(SampleCapReached):
            policy.run(0, make_stream(0), sample_cap=5)

    def test_mean_samples_above_delay_lower_bound(self, benchmark_normal):
        cfg = PolicyConfig(delta=1e-3, clustering=ClusteringConfig.uniform(0.1))
        policy = EliminationPolicy(benchmark_normal, cfg)
        rng = make_stream(5)
        samples = [policy.run(int(rng.integers(16)), rng).total_samples for _ in range(200)]
        bounds = delay_bounds(benchmark_normal, cfg, verify_assumptions(benchmark_normal))
        assert np.mean(samples) >= bounds.lower


class TestBounds:
    def test_delay_bounds(self, benchmark_normal):
        report = verify_assumptions(benchmark_normal)
        gamma = math.log2(16 / 1e-3)

        plain = delay_bounds(benchmark_normal, PolicyConfig(delta=1e-3), report)
        assert plain.gamma == pytest.approx(gamma)
        assert plain.lower == pytest.approx(gamma / report.beta)
        assert plain.upper == math.inf

        clustered = delay_bounds(benchmark_normal, PolicyConfig(delta=1e-3, clustering=ClusteringConfig.uniform(0.1)), report)
        assert clustered.upper == pytest.approx(16 / 0.1 * gamma)

    def test_abr_upper_bound(self):
        expected = 1e-3 / 256 * (16 / 0.1) * math.log2(16 / 1e-3) + 1e-3
        assert abr_upper_bound(1e-3, 16, 0.1) == pytest.approx(expected)
        assert abr_upper_bound(1e-3, 16, 0.0) == math.inf

    def test_predicted_stage_delay(self, build_instance):
        inst = build_instance([[0.0, 1.0, 3.0]])
        cluster_map = build_cluster_map(inst, ClusteringConfig())
        gamma = 10.0
        # truth 0 is its own representative; the slowest contest is against mean 1
        expected = gamma / (1.0 / (2 * LN2))
        assert predicted_stage_delay(inst, cluster_map, {0, 1, 2}, 0, 0, gamma) == pytest.approx(expected)

    def test_predicted_stage_delay_bad_epsilon(self, build_instance):
        inst = build_instance([[0.0, 0.5, 1.0, 1.6]])
        cluster_map = build_cluster_map(inst, ClusteringConfig.uniform(0.25))
        assert predicted_stage_delay(inst, cluster_map, {0, 1, 2, 3}, 0, 2, 10.0) == math.inf


@pytest.mark.slow
class TestStageDelayAsymptotics:
    def _ratio(self, inst, delta, runs=10_000):
        cluster_map = build_cluster_map(inst, ClusteringConfig())
        gamma = threshold(inst.hypotheses, delta)
        predicted = predicted_stage_delay(inst, cluster_map, {0, 1}, 0, 0, gamma)
        rng = make_stream(17)
        taus = [
            run_stage(inst, cluster_map, {0, 1}, 0, gamma, ObservationSource(inst, 0, rng)).tau
            for _ in range(runs)
        ]
        return np.mean(taus) / predicted

    def test_ratio_approaches_one(self, build_instance):
        inst = build_instance([[0.0, 1.0]])
        coarse = self._ratio(inst, 1e-1)
        fine = self._ratio(inst, 1e-4)
        assert 0.8 <= fine <= 1.6
        assert abs(fine - 1.0) < abs(coarse - 1.0)
