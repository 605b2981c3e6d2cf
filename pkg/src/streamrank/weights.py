"""Category weight learning: adaptive global weights and per-user weights.

Global weights are per-category click-through rates with additive
smoothing: w_j = (clicks_j + alpha) / (views_j + alpha + beta), which is
the mean of a Beta(clicks + alpha, views - clicks + beta) belief and
enforces a floor of alpha / (alpha + beta) for zero-traffic categories.

Per-user weights come from a Dirichlet-Multinomial model of the user's
category clicks: the posterior is Dirichlet(counts + prior) and its mean
is the normalized count-plus-prior vector. To expose users to related
categories, that mean is multiplied by a column-conditional co-interest
matrix M (M[i][j] = share of category-j clickers who also clicked i) and
renormalized; repeated application converges to M's leading eigenvector,
which acts as the population-wide interest vector.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np


class WeightsError(ValueError):
    """Invalid weight-learning input."""


# -- global weights -------------------------------------------------------


@dataclass
class CategoryStats:
    """Aggregate per-category click and view counts."""

    clicks: np.ndarray
    views: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "CategoryStats":
        return cls(clicks=np.zeros(d), views=np.zeros(d))

    @property
    def d(self) -> int:
        return len(self.clicks)

    def add_view(self, category: int, n: int = 1):
        self.views[category] += n

    def add_click(self, category: int, n: int = 1):
        self.clicks[category] += n

    def merge(self, other: "CategoryStats"):
        self.clicks += other.clicks
        self.views += other.views

    def copy(self) -> "CategoryStats":
        return CategoryStats(clicks=self.clicks.copy(), views=self.views.copy())


@dataclass(frozen=True)
class SmoothingPriors:
    """Pseudo-counts damping low-traffic noise; floor weight is a/(a+b)."""

    alpha: float = 1.0
    beta: float = 9.0

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise WeightsError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise WeightsError(f"beta must be positive and finite, got {self.beta}")


def global_weights(stats: CategoryStats, priors: SmoothingPriors = SmoothingPriors()) -> np.ndarray:
    """Smoothed per-category CTR; every entry lands strictly inside (0, 1)."""
    clicks = np.asarray(stats.clicks, dtype=float)
    views = np.asarray(stats.views, dtype=float)
    if np.any(clicks < 0) or np.any(views < 0):
        raise WeightsError("counts must be nonnegative")
    return (clicks + priors.alpha) / (views + priors.alpha + priors.beta)


# -- per-user weights ------------------------------------------------------


@dataclass(frozen=True)
class DirichletPrior:
    alpha0: np.ndarray

    def __post_init__(self):
        alpha0 = np.asarray(self.alpha0, dtype=float)
        if np.any(alpha0 <= 0) or np.any(~np.isfinite(alpha0)):
            raise WeightsError("Dirichlet prior entries must be strictly positive")
        object.__setattr__(self, "alpha0", alpha0)

    @classmethod
    def uniform(cls, d: int, strength: float = 1.0) -> "DirichletPrior":
        return cls(alpha0=np.full(d, strength))


class UserProfile:
    """Per-user category click counts with a bounded recency window.

    ``click_counts`` and the event window stay consistent: decay drops the
    oldest events and decrements their categories, so older signals are
    literally subtracted rather than discounted.
    """

    def __init__(self, user_id: str, d: int):
        self.user_id = user_id
        self.click_counts = np.zeros(d)
        self.events = deque()

    @property
    def total_clicks(self) -> int:
        return len(self.events)

    def record_click(self, category: int, timestamp: float):
        if not 0 <= category < len(self.click_counts):
            raise WeightsError(f"category {category} out of range")
        self.click_counts[category] += 1
        self.events.append((category, timestamp))

    def decay(self, policy: "DecayPolicy", now: float | None = None):
        """Drop events beyond the ring size or older than the age window."""
        while policy.max_events is not None and len(self.events) > policy.max_events:
            category, _ = self.events.popleft()
            self.click_counts[category] -= 1
        if policy.max_age is not None:
            if now is None:
                raise WeightsError("age-based decay needs a reference time")
            cutoff = now - policy.max_age
            while self.events and self.events[0][1] < cutoff:
                category, _ = self.events.popleft()
                self.click_counts[category] -= 1


@dataclass(frozen=True)
class DecayPolicy:
    """Sliding-window signal decay: keep at most ``max_events`` recent
    clicks, optionally also dropping anything older than ``max_age``."""

    max_events: int | None = 200
    max_age: float | None = None


def user_posterior_mean(profile: UserProfile, prior: DirichletPrior) -> np.ndarray:
    """Mean of the Dirichlet posterior over the user's category interests."""
    posterior = profile.click_counts + prior.alpha0
    return posterior / posterior.sum()


# -- co-interest diffusion -------------------------------------------------


def top_categories(counts, top_k: int):
    """Highest-count categories, ties to the lower index; used to denoise
    the co-interest counting."""
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {category for category, count in ranked[:top_k] if count > 0}


def build_co_interest(user_clicks, d: int, top_k: int = 5) -> np.ndarray:
    """Column-conditional co-click matrix over users' top categories.

    ``user_clicks`` maps user id to either a category->count mapping or an
    iterable of clicked categories (repeats collapse: a user counts once
    per category). Columns for categories nobody clicked become basis
    vectors so diffusion stays well-defined.
    """
    if not user_clicks:
        raise WeightsError("co-interest needs a non-empty click log")
    clickers = np.zeros(d)
    pairs = np.zeros((d, d))
    for counts in user_clicks.values():
        if not isinstance(counts, dict):
            counts = Counter(counts)
        top = top_categories(counts, top_k)
        for j in top:
            if not 0 <= j < d:
                raise WeightsError(f"category {j} out of range")
            clickers[j] += 1
            for i in top:
                pairs[i, j] += 1
    matrix = np.eye(d)
    clicked = clickers > 0
    matrix[:, clicked] = pairs[:, clicked] / clickers[clicked]
    return matrix


def diffuse(matrix: np.ndarray, interest: np.ndarray) -> np.ndarray:
    """Spread interest mass to related categories, then renormalize."""
    mixed = matrix @ np.asarray(interest, dtype=float)
    total = mixed.sum()
    if not total > 0:
        raise WeightsError("diffusion produced a zero vector")
    return mixed / total


def diffusion_fixed_point(matrix: np.ndarray, tol: float = 1e-10,
                          max_iter: int = 100_000) -> np.ndarray:
    """Power iteration via repeated diffusion; the limit is the leading
    eigenvector of the co-interest matrix, normalized to sum 1."""
    d = matrix.shape[0]
    vec = np.full(d, 1.0 / d)
    for _ in range(max_iter):
        nxt = diffuse(matrix, vec)
        if np.abs(nxt - vec).sum() < tol:
            return nxt
        vec = nxt
    return vec


def effective_weights(profile: UserProfile | None, global_w: np.ndarray,
                      matrix: np.ndarray, prior: DirichletPrior,
                      min_clicks: int = 10) -> np.ndarray:
    """Personalized weights once the user has enough history, else global."""
    if profile is None or profile.total_clicks < min_clicks:
        return global_w
    return diffuse(matrix, user_posterior_mean(profile, prior))
