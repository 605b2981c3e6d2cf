"""Submodular selection and ranking of scored items by category.

The objective for a selection A with n_j items chosen from category j is

    sum_j w_j * log(1 + n_j)  +  scale * sum_{i in A} s_i

(natural log). It is monotone and submodular for nonnegative weights and
scores, so greedy selection carries the (1 - 1/e) guarantee. ``celf_select``
is the lazy-evaluation fast path; it reproduces ``greedy_select`` exactly,
sequence and objective, under the shared deterministic tie-break
(higher gain, then higher score, then lexicographically smaller item id).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class SelectionError(ValueError):
    """Invalid selection instance (bad sizes, categories, or values)."""


@dataclass(frozen=True)
class ScoredItem:
    item_id: str
    category: int
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.score) and self.score >= 0.0):
            raise SelectionError(
                f"score must be finite and >= 0, got {self.score} for {self.item_id!r}"
            )
        if self.category < 0:
            raise SelectionError(f"negative category for {self.item_id!r}")


@dataclass
class SelectionState:
    """Selection under construction: chosen order, per-category counts,
    running objective, and the number of marginal-gain evaluations spent."""

    chosen: list = field(default_factory=list)
    counts: list = field(default_factory=list)
    objective_value: float = 0.0
    evaluations: int = 0

    @classmethod
    def empty(cls, d: int) -> "SelectionState":
        return cls(chosen=[], counts=[0] * d, objective_value=0.0)

    def add(self, item: ScoredItem, gain: float):
        self.chosen.append(item)
        self.counts[item.category] += 1
        self.objective_value += gain


def category_bonus(weight: float, count: int) -> float:
    """Marginal diversity credit for one more item in a category already
    holding ``count`` chosen items."""
    return weight * (math.log(2.0 + count) - math.log(1.0 + count))


def objective(selection, weights, score_scale: float = 1.0) -> float:
    weights = np.asarray(weights, dtype=float)
    counts = np.zeros(len(weights))
    score_sum = 0.0
    for item in selection:
        if item.category >= len(weights):
            raise SelectionError(
                f"category {item.category} outside weight vector of size {len(weights)}"
            )
        counts[item.category] += 1
        score_sum += item.score
    return float(np.dot(weights, np.log1p(counts)) + score_scale * score_sum)


def marginal_gain(state: SelectionState, item: ScoredItem, weights,
                  score_scale: float = 1.0) -> float:
    return score_scale * item.score + category_bonus(
        float(weights[item.category]), state.counts[item.category]
    )


def _check_instance(items, weights, k):
    weights = np.asarray(weights, dtype=float)
    if k > len(items):
        raise SelectionError(f"k={k} exceeds candidate count n={len(items)}")
    if k < 0:
        raise SelectionError("k must be nonnegative")
    if np.any(~np.isfinite(weights)) or np.any(weights < 0):
        raise SelectionError("weights must be finite and nonnegative")
    for item in items:
        if item.category >= len(weights):
            raise SelectionError(
                f"category {item.category} outside weight vector of size {len(weights)}"
            )
    return weights


def greedy_select(items, weights, k: int, score_scale: float = 1.0) -> SelectionState:
    """Naive greedy reference: re-evaluates every remaining item each step."""
    weights = _check_instance(items, weights, k)
    state = SelectionState.empty(len(weights))
    remaining = list(items)
    for _ in range(k):
        bonus = {}
        best_idx = -1
        best_gain = best_score = 0.0
        best_id = ""
        for idx, item in enumerate(remaining):
            b = bonus.get(item.category)
            if b is None:
                b = category_bonus(weights[item.category], state.counts[item.category])
                bonus[item.category] = b
            gain = score_scale * item.score + b
            state.evaluations += 1
            if (
                best_idx < 0
                or gain > best_gain
                or (
                    gain == best_gain
                    and (
                        item.score > best_score
                        or (item.score == best_score and item.item_id < best_id)
                    )
                )
            ):
                best_idx = idx
                best_gain = gain
                best_score = item.score
                best_id = item.item_id
        state.add(remaining.pop(best_idx), best_gain)
    return state


def celf_select(items, weights, k: int, score_scale: float = 1.0) -> SelectionState:
    """Lazy greedy: stale gains are upper bounds, so the queue top only needs
    re-evaluation when its category count moved since the gain was computed."""
    weights = _check_instance(items, weights, k)
    state = SelectionState.empty(len(weights))
    counts = state.counts

    base_bonus = [category_bonus(w, 0) for w in weights]
    heap = []
    for item in items:
        gain = score_scale * item.score + base_bonus[item.category]
        state.evaluations += 1
        heap.append((-gain, -item.score, item.item_id, item, 0))
    heapq.heapify(heap)

    while len(state.chosen) < k:
        neg_gain, neg_score, item_id, item, count_at_eval = heapq.heappop(heap)
        cat = item.category
        if count_at_eval == counts[cat]:
            state.add(item, -neg_gain)
            continue
        gain = score_scale * item.score + category_bonus(weights[cat], counts[cat])
        state.evaluations += 1
        if heap:
            top = heap[0]
            if (-gain, neg_score, item_id) > (top[0], top[1], top[2]):
                heapq.heappush(heap, (-gain, neg_score, item_id, item, counts[cat]))
                continue
        state.add(item, gain)
    return state


def celf_select_arrays(item_ids, categories, scores, weights, k: int,
                       score_scale: float = 1.0) -> list:
    """Array-backed twin of ``celf_select`` for hot paths; returns the
    selected positions in selection order. Same gains, same tie-break,
    same lazy queue, so the chosen sequence matches item for item."""
    n = len(scores)
    weights = np.asarray(weights, dtype=float)
    if k > n:
        raise SelectionError(f"k={k} exceeds candidate count n={n}")
    counts = [0] * len(weights)
    base_bonus = [category_bonus(w, 0) for w in weights]

    heap = []
    for idx in range(n):
        gain = score_scale * scores[idx] + base_bonus[categories[idx]]
        heap.append((-gain, -scores[idx], item_ids[idx], idx, 0))
    heapq.heapify(heap)

    chosen = []
    while len(chosen) < k:
        neg_gain, neg_score, item_id, idx, count_at_eval = heapq.heappop(heap)
        cat = categories[idx]
        if count_at_eval == counts[cat]:
            chosen.append(idx)
            counts[cat] += 1
            continue
        gain = score_scale * scores[idx] + category_bonus(weights[cat], counts[cat])
        if heap:
            top = heap[0]
            if (-gain, neg_score, item_id) > (top[0], top[1], top[2]):
                heapq.heappush(heap, (-gain, neg_score, item_id, idx, counts[cat]))
                continue
        chosen.append(idx)
        counts[cat] += 1
    return chosen


def brute_force_select(items, weights, k: int, score_scale: float = 1.0,
                       max_subsets: int = 10**6):
    """Exact argmax over all size-k subsets; test oracle for small instances.

    Returns ``(subset, value)`` with the subset sorted by item id.
    """
    weights = _check_instance(items, weights, k)
    n = len(items)
    if math.comb(n, k) > max_subsets:
        raise SelectionError(f"C({n},{k}) exceeds the {max_subsets} subset limit")
    best_value = -math.inf
    best_subset = ()
    for subset in combinations(items, k):
        value = objective(subset, weights, score_scale)
        if value > best_value:
            best_value = value
            best_subset = subset
    return tuple(sorted(best_subset, key=lambda it: it.item_id)), best_value


def random_instance(n: int, d: int, rng, score_dist: str = "uniform"):
    """Synthetic benchmark instance: items with random categories/scores plus
    a random nonnegative weight vector."""
    if score_dist == "uniform":
        scores = rng.random(n)
    elif score_dist == "beta":
        scores = rng.beta(2.0, 5.0, n)
    elif score_dist == "constant":
        scores = np.full(n, 0.5)
    else:
        raise SelectionError(f"unknown score distribution {score_dist!r}")
    categories = rng.integers(0, d, n)
    items = [
        ScoredItem(item_id=f"i{idx:06d}", category=int(categories[idx]),
                   score=float(scores[idx]))
        for idx in range(n)
    ]
    weights = rng.random(d) * 2.0
    return items, weights


def benchmark(n: int, k: int, d: int, score_dist: str = "uniform", seed: int = 0,
              include_naive: bool = True) -> dict:
    """Time both selectors on one random instance; used by ``bench-diversify``."""
    import time

    rng = np.random.default_rng(seed)
    items, weights = random_instance(n, d, rng, score_dist)

    start = time.perf_counter()
    celf = celf_select(items, weights, k)
    celf_time = time.perf_counter() - start

    row = {
        "n": n,
        "k": k,
        "d": d,
        "distribution": score_dist,
        "evaluations_celf": celf.evaluations,
        "wall_time_celf": celf_time,
        "evaluations_naive": None,
        "wall_time_naive": None,
    }
    if include_naive:
        start = time.perf_counter()
        naive = greedy_select(items, weights, k)
        row["wall_time_naive"] = time.perf_counter() - start
        row["evaluations_naive"] = naive.evaluations
        if [it.item_id for it in naive.chosen] != [it.item_id for it in celf.chosen]:
            raise SelectionError("lazy and naive selections diverged")
    return row
