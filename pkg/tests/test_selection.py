import math
import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stepsift.selection import (EnumerationGuardError, SelectionConfig,
                                StudySpec, approximation_study,
                                generate_instance, objective, select,
                                select_diversity_only, select_exact,
                                select_greedy, select_importance_only,
                                select_random)
from stepsift.similarity import ScoreCache


def make_cache(phi, pairs):
    """pairs: {(i, j): value} on the upper triangle."""
    t = len(phi)
    d = np.zeros((t, t))
    for (i, j), value in pairs.items():
        d[i, j] = value
        d[j, i] = value
    return ScoreCache.from_matrix(phi, d)


@pytest.fixture
def worked_instance():
    # phi = [0.9, 0.8, 0.1]; D(0,1)=0.1, D(0,2)=0.9, D(1,2)=0.9
    return make_cache([0.9, 0.8, 0.1],
                      {(0, 1): 0.1, (0, 2): 0.9, (1, 2): 0.9})


def random_cache(rng, t):
    phi = [rng.random() for _ in range(t)]
    pairs = {(i, j): rng.random()
             for i in range(t) for j in range(i + 1, t)}
    return make_cache(phi, pairs)


class TestObjective:
    def test_empty_set(self, worked_instance):
        assert objective([], worked_instance, 1.0) == 0.0

    def test_singleton_no_pairs(self, worked_instance):
        assert objective([2], worked_instance, 1.0) == pytest.approx(0.1)

    def test_worked_value(self, worked_instance):
        # 0.9 + 0.1 + 1.0 * 0.9 = 1.9, cross-checked by pair enumeration
        assert objective([0, 2], worked_instance, 1.0) == pytest.approx(1.9)

    def test_out_of_range_index(self, worked_instance):
        with pytest.raises(IndexError):
            objective([0, 3], worked_instance, 1.0)


class TestWorkedInstance:
    def test_all_three_pairs_enumerated(self, worked_instance):
        values = {pair: objective(pair, worked_instance, 1.0)
                  for pair in combinations(range(3), 2)}
        assert values[(0, 1)] == pytest.approx(1.8)
        assert values[(0, 2)] == pytest.approx(1.9)
        assert values[(1, 2)] == pytest.approx(1.8)

    def test_greedy_beats_pure_importance_pair(self, worked_instance):
        result = select_greedy(worked_instance, SelectionConfig(budget=2))
        assert result.indices == (0, 2)
        assert result.objective_value == pytest.approx(1.9)

    def test_exact_agrees(self, worked_instance):
        result = select_exact(worked_instance, SelectionConfig(budget=2))
        assert result.indices == (0, 2)
        assert result.objective_value == pytest.approx(1.9)
        assert result.evaluated_subsets == 3


class TestGreedy:
    def test_budget_at_least_t_returns_all(self, worked_instance):
        result = select_greedy(worked_instance, SelectionConfig(budget=3))
        assert result.indices == (0, 1, 2)

    def test_lambda_zero_degenerates_to_top_phi(self):
        cache = make_cache([0.1, 0.9, 0.5, 0.7],
                           {(i, j): 0.8 for i in range(4) for j in range(i + 1, 4)})
        result = select_greedy(cache, SelectionConfig(budget=2, lam=0.0))
        assert result.indices == (1, 3)

    def test_seed_tie_breaks_to_lowest_pair(self):
        cache = make_cache([0.5, 0.5, 0.5], {(0, 1): 0.3, (0, 2): 0.3, (1, 2): 0.3})
        result = select_greedy(cache, SelectionConfig(budget=2))
        assert result.indices == (0, 1)

    def test_gain_tie_breaks_to_lowest_index(self):
        phi = [0.9, 0.9, 0.2, 0.2]
        pairs = {(i, j): 0.5 for i in range(4) for j in range(i + 1, 4)}
        cache = make_cache(phi, pairs)
        result = select_greedy(cache, SelectionConfig(budget=3))
        assert result.indices == (0, 1, 2)

    def test_budget_one_returns_argmax_phi(self):
        cache = make_cache([0.2, 0.9, 0.9], {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
        result = select_greedy(cache, SelectionConfig(budget=1))
        assert result.indices == (1,)
        assert result.objective_value == pytest.approx(0.9)

    def test_budget_size_invariant(self):
        rng = random.Random(5)
        for t in (1, 2, 3, 7, 12):
            cache = random_cache(rng, t)
            for budget in (1, 2, 3, 5, 20):
                result = select_greedy(cache, SelectionConfig(budget=budget))
                assert len(result.indices) == min(budget, t)
                assert list(result.indices) == sorted(set(result.indices))

    def test_deterministic(self):
        cache = random_cache(random.Random(11), 9)
        config = SelectionConfig(budget=3)
        first = select_greedy(cache, config)
        assert all(select_greedy(cache, config) == first for _ in range(3))

    @given(st.integers(0, 10_000), st.integers(4, 12), st.integers(2, 4))
    @settings(max_examples=100, deadline=None)
    def test_gain_trace_consistency(self, seed, t, budget):
        cache = random_cache(random.Random(seed), t)
        config = SelectionConfig(budget=budget)
        result = select_greedy(cache, config)
        if budget >= t:
            return
        recomputed = objective(result.indices, cache, config.lam)
        assert result.objective_value == pytest.approx(recomputed, abs=1e-9)
        # total gains sum to the objective
        assert math.fsum(g for _, g in result.gain_trace) == \
            pytest.approx(recomputed, abs=1e-9)
        # seed-pair objective plus expansion gains also reaches it
        i1, i2 = result.gain_trace[0][0], result.gain_trace[1][0]
        seed_value = objective([i1, i2], cache, config.lam)
        tail = math.fsum(g for _, g in result.gain_trace[2:])
        assert seed_value + tail == pytest.approx(recomputed, abs=1e-9)

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_exact_dominates_greedy_dominates_random(self, seed):
        rng = random.Random(seed)
        cache = random_cache(rng, rng.randint(4, 10))
        config = SelectionConfig(budget=3)
        exact = select_exact(cache, config)
        greedy = select_greedy(cache, config)
        rand = select_random(cache.size, SelectionConfig(budget=3, seed=seed), cache)
        assert exact.objective_value >= greedy.objective_value - 1e-12
        assert exact.objective_value >= rand.objective_value - 1e-12


class TestExact:
    def test_enumeration_count_37_choose_3(self):
        cache = random_cache(random.Random(0), 37)
        result = select_exact(cache, SelectionConfig(budget=3))
        assert result.evaluated_subsets == 7770
        assert math.comb(37, 3) == 7770

    def test_single_subset_when_budget_is_t(self, worked_instance):
        result = select_exact(worked_instance, SelectionConfig(budget=3))
        assert result.indices == (0, 1, 2)
        assert result.evaluated_subsets == 1

    def test_guard_refusal_states_count(self):
        cache = random_cache(random.Random(0), 30)
        with pytest.raises(EnumerationGuardError, match="4060"):
            select_exact(cache, SelectionConfig(budget=3), max_enumeration=100)

    def test_tie_breaks_lexicographically(self):
        cache = make_cache([0.5, 0.5, 0.5], {(0, 1): 0.3, (0, 2): 0.3, (1, 2): 0.3})
        result = select_exact(cache, SelectionConfig(budget=2))
        assert result.indices == (0, 1)


class TestBaselines:
    def test_random_deterministic_per_seed(self):
        config = SelectionConfig(budget=3, seed=42)
        first = select_random(10, config)
        assert select_random(10, config).indices == first.indices
        other = select_random(10, SelectionConfig(budget=3, seed=43))
        assert len(first.indices) == len(other.indices) == 3

    def test_importance_only_tie_rule(self):
        cache = make_cache([0.3, 0.3, 0.1], {(0, 1): 0.9, (0, 2): 0.9, (1, 2): 0.9})
        result = select_importance_only(cache, SelectionConfig(budget=2))
        assert result.indices == (0, 1)

    def test_diversity_only_on_worked_instance(self, worked_instance):
        # with phi zeroed the pairs score 0.1 / 0.9 / 0.9; lowest tied pair wins
        result = select_diversity_only(worked_instance, SelectionConfig(budget=2))
        assert result.indices == (0, 2)

    def test_dispatch(self, worked_instance):
        for method in ("greedy", "exact", "random", "importance_only",
                       "diversity_only"):
            result = select(worked_instance, SelectionConfig(budget=2, method=method))
            assert result.method == method
            assert len(result.indices) == 2


class TestModularExactness:
    def test_lambda_zero_greedy_equals_exact(self):
        rng = random.Random(987)
        for _ in range(300):
            cache = random_cache(rng, rng.randint(3, 12))
            config = SelectionConfig(budget=3, lam=0.0)
            assert set(select_greedy(cache, config).indices) == \
                set(select_exact(cache, config).indices)

    def test_zero_diversity_matrix_greedy_equals_exact(self):
        rng = random.Random(31)
        for _ in range(100):
            t = rng.randint(3, 10)
            cache = make_cache([rng.random() for _ in range(t)], {})
            config = SelectionConfig(budget=3)
            assert set(select_greedy(cache, config).indices) == \
                set(select_exact(cache, config).indices)


class TestStudy:
    def test_zero_diversity_instances_always_match(self):
        # D == 0 makes the objective modular, so greedy is exact
        rng = random.Random(0)
        matches = 0
        for _ in range(50):
            t = rng.randint(5, 10)
            cache = make_cache([rng.random() for _ in range(t)], {})
            config = SelectionConfig(budget=3)
            greedy = select_greedy(cache, config)
            exact = select_exact(cache, config)
            matches += set(greedy.indices) == set(exact.indices)
        assert matches == 50

    def test_single_instance_perfect_ratio(self):
        report = approximation_study(StudySpec(instances=1, t_min=3, t_max=3,
                                               t0=3, seed=1))
        assert report.instances == 1
        assert report.mean_ratio == pytest.approx(1.0)
        assert report.match_rate == 1.0

    def test_study_deterministic(self):
        spec = StudySpec(instances=40, t_min=6, t_max=9, t0=3, seed=7)
        first = approximation_study(spec)
        second = approximation_study(spec)
        assert first.as_dict() == second.as_dict()

    def test_guard_skips_and_counts(self):
        spec = StudySpec(instances=5, t_min=8, t_max=8, t0=3, seed=0, guard=10)
        report = approximation_study(spec)
        assert report.skipped == 5
        assert report.instances == 0

    def test_instance_generator_shape(self):
        cache = generate_instance(random.Random(3), 8, 12)
        assert 8 <= cache.size <= 12
        for i in range(cache.size):
            assert 0.0 <= cache.phi(i) <= 1.0
            assert cache.d(i, i) == 0.0
            for j in range(i + 1, cache.size):
                assert cache.d(i, j) == cache.d(j, i)
                assert 0.0 <= cache.d(i, j) <= 1.0
