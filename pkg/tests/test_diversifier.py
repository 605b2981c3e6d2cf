import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamrank.diversifier import (
    ScoredItem,
    SelectionError,
    SelectionState,
    brute_force_select,
    celf_select,
    celf_select_arrays,
    greedy_select,
    marginal_gain,
    objective,
    random_instance,
)

A = ScoredItem("a", 0, 0.5)
B = ScoredItem("b", 0, 0.45)
C = ScoredItem("c", 1, 0.2)
W2 = np.array([1.0, 1.0])


class TestObjective:
    def test_empty_selection_is_zero(self):
        assert objective([], W2) == 0.0

    def test_single_item(self):
        assert objective([A], W2) == pytest.approx(0.5 + math.log(2), abs=1e-12)

    def test_duplicate_category_pair(self):
        pair = [A, ScoredItem("a2", 0, 0.5)]
        assert objective(pair, W2) == pytest.approx(1.0 + math.log(3), abs=1e-12)

    def test_saturation_in_one_category(self):
        w = np.array([0.7])
        for k in range(1, 12):
            sel = [ScoredItem(f"i{n}", 0, 0.5) for n in range(k)]
            assert objective(sel, w) == pytest.approx(
                k * 0.5 + 0.7 * math.log(1 + k), abs=1e-9
            )


class TestMarginalGain:
    def test_first_item_of_a_category(self):
        state = SelectionState.empty(2)
        assert marginal_gain(state, C, W2) == pytest.approx(0.2 + math.log(2), abs=1e-12)

    def test_second_item_of_same_category(self):
        state = SelectionState.empty(2)
        state.add(A, marginal_gain(state, A, W2))
        assert marginal_gain(state, B, W2) == pytest.approx(
            0.45 + math.log(1.5), abs=1e-12
        )

    def test_zero_weight_reduces_to_score(self):
        state = SelectionState.empty(2)
        state.add(A, 0.5)
        state.add(ScoredItem("x", 0, 0.3), 0.3)
        assert marginal_gain(state, B, np.zeros(2)) == pytest.approx(0.45, abs=1e-15)

    def test_equals_objective_difference(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            items, w = random_instance(12, 4, rng)
            state = SelectionState.empty(4)
            chosen = []
            for item in items[:6]:
                gain = marginal_gain(state, item, w)
                assert gain == pytest.approx(
                    objective(chosen + [item], w) - objective(chosen, w), abs=1e-12
                )
                state.add(item, gain)
                chosen.append(item)


class TestGreedy:
    def test_spec_three_item_instance(self):
        state = greedy_select([A, B, C], W2, k=2)
        assert [it.item_id for it in state.chosen] == ["a", "c"]

    def test_zero_weights_reduce_to_score_sort(self):
        state = greedy_select([A, B, C], np.zeros(2), k=2)
        assert [it.item_id for it in state.chosen] == ["a", "b"]

    def test_k_equals_n_selects_everything(self):
        state = greedy_select([A, B, C], W2, k=3)
        assert len(state.chosen) == 3
        assert state.objective_value == pytest.approx(objective(state.chosen, W2), abs=1e-9)

    def test_k_too_large_raises(self):
        with pytest.raises(SelectionError):
            greedy_select([A, B], W2, k=3)

    def test_counts_match_chosen(self):
        rng = np.random.default_rng(1)
        items, w = random_instance(40, 6, rng)
        state = greedy_select(items, w, k=15)
        assert sum(state.counts) == 15
        for j in range(6):
            assert state.counts[j] == sum(1 for it in state.chosen if it.category == j)


class TestBruteForce:
    def test_spec_instance_value(self):
        subset, value = brute_force_select([A, B, C], W2, k=2)
        assert {it.item_id for it in subset} == {"a", "c"}
        assert value == pytest.approx(0.5 + 0.2 + 2 * math.log(2), abs=1e-12)

    def test_zero_weights_give_top_k_by_score(self):
        subset, _ = brute_force_select([A, B, C], np.zeros(2), k=2)
        assert {it.item_id for it in subset} == {"a", "b"}

    def test_k_equals_n(self):
        subset, value = brute_force_select([A, B, C], W2, k=3)
        assert len(subset) == 3
        assert value == pytest.approx(objective([A, B, C], W2), abs=1e-12)

    def test_instance_size_guard(self):
        rng = np.random.default_rng(2)
        items, w = random_instance(60, 4, rng)
        with pytest.raises(SelectionError, match="subset limit"):
            brute_force_select(items, w, k=30)


class TestCelfEquivalence:
    def test_matches_greedy_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(150):
            n = int(rng.integers(1, 120))
            d = int(rng.integers(1, 30))
            k = int(rng.integers(1, n + 1))
            items, w = random_instance(n, d, rng)
            greedy = greedy_select(items, w, k)
            celf = celf_select(items, w, k)
            assert [it.item_id for it in greedy.chosen] == [
                it.item_id for it in celf.chosen
            ]
            assert celf.objective_value == greedy.objective_value
            assert celf.evaluations <= greedy.evaluations

    def test_single_category_adversarial_instance(self):
        rng = np.random.default_rng(7)
        items, _ = random_instance(50, 1, rng)
        w = np.array([5.0])
        greedy = greedy_select(items, w, k=20)
        celf = celf_select(items, w, k=20)
        assert [it.item_id for it in greedy.chosen] == [it.item_id for it in celf.chosen]

    def test_tied_scores_and_categories(self):
        items = [ScoredItem(f"i{n}", n % 3, 0.5) for n in range(12)]
        w = np.array([1.0, 1.0, 1.0])
        greedy = greedy_select(items, w, k=9)
        celf = celf_select(items, w, k=9)
        assert [it.item_id for it in greedy.chosen] == [it.item_id for it in celf.chosen]

    def test_single_item_single_evaluation(self):
        state = celf_select([A], np.array([1.0]), k=1)
        assert [it.item_id for it in state.chosen] == ["a"]
        assert state.evaluations == 1

    def test_array_variant_matches_object_variant(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            n = int(rng.integers(2, 150))
            d = int(rng.integers(1, 20))
            k = int(rng.integers(1, n + 1))
            items, w = random_instance(n, d, rng)
            picked = celf_select_arrays(
                [it.item_id for it in items],
                [it.category for it in items],
                np.array([it.score for it in items]),
                w,
                k,
            )
            reference = celf_select(items, w, k)
            assert [items[i].item_id for i in picked] == [
                it.item_id for it in reference.chosen
            ]


class TestSubmodularityProperties:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_diminishing_returns_along_growth_chains(self, seed):
        rng = np.random.default_rng(seed)
        items, w = random_instance(20, 5, rng)
        probe = items[0]
        state = SelectionState.empty(5)
        last_gain = marginal_gain(state, probe, w)
        for item in items[1:10]:
            state.add(item, marginal_gain(state, item, w))
            gain = marginal_gain(state, probe, w)
            assert gain <= last_gain + 1e-12
            last_gain = gain

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_monotone_objective(self, seed):
        rng = np.random.default_rng(seed)
        items, w = random_instance(15, 4, rng)
        value = 0.0
        chosen = []
        for item in items:
            chosen.append(item)
            new_value = objective(chosen, w)
            assert new_value >= value - 1e-12
            value = new_value

    def test_greedy_respects_nemhauser_bound(self):
        rng = np.random.default_rng(99)
        bound = 1.0 - 1.0 / math.e
        for _ in range(60):
            n = int(rng.integers(4, 13))
            k = int(rng.integers(1, 5))
            d = int(rng.integers(1, 6))
            items, w = random_instance(n, d, rng)
            greedy = greedy_select(items, w, k)
            _, best = brute_force_select(items, w, k)
            assert greedy.objective_value >= bound * best - 1e-12
