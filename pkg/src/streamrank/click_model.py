"""Bayesian linear probit click model with Thompson-sampled scoring.

Every attribute value (``brand=nike``, ``item_id=B0123``, ...) owns an
independent Normal belief about its additive contribution to click
propensity. An item's predicted click probability is

    Phi(sum of active means / sqrt(beta^2 + sum of active variances))

where Phi is the standard Normal CDF and beta is a fixed noise scale.
Observations move only the active weights, by Gaussian moment matching
against the probit likelihood: for a single Gaussian factor this update
is exact in the first two posterior moments.

Thompson scoring draws each weight once from its posterior, shares the
draw across items that have the attribute value in common, and evaluates
the click probability at zero residual uncertainty.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

SNAPSHOT_VERSION = 1

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_P_FLOOR = 1e-15
_P_CEIL = 1.0 - 1e-15
# Keeps a posterior variance strictly positive even under extreme surprise.
_VAR_FACTOR_FLOOR = 1e-12


class SnapshotError(ValueError):
    """Corrupt or incompatible model snapshot."""


@dataclass
class GaussianWeight:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class Observation:
    """One labeled impression, resolved to its active attribute-value keys."""

    keys: tuple
    clicked: bool

    def __post_init__(self):
        if not self.keys:
            raise ValueError("observation needs at least one active key")


def _gauss_over_cdf(t: float) -> float:
    """N(t)/Phi(t), computed in log space so the deep negative tail is stable."""
    return math.exp(-0.5 * t * t - _LOG_SQRT_2PI - log_ndtr(t))


def _shrink(t: float) -> float:
    """v(t) * (v(t) + t); the multiplicative variance correction in (0, 1)."""
    v = _gauss_over_cdf(t)
    return v * (v + t)


def item_keys(item) -> tuple:
    """Active attribute-value keys for an item, one per attribute, sorted."""
    return tuple(sorted(f"{name}={value}" for name, value in item.attributes.items()))


class ClickModel:
    """Mutable weight table; copy or snapshot before sharing across writers."""

    def __init__(self, prior_mean=0.0, prior_variance=1.0, noise_scale=1.0):
        if not prior_variance > 0:
            raise ValueError("prior_variance must be positive")
        if not noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        self.prior_mean = float(prior_mean)
        self.prior_variance = float(prior_variance)
        self.noise_scale = float(noise_scale)
        self.weights = {}
        self.version = 0

    # -- inspection ------------------------------------------------------

    def weight(self, key) -> GaussianWeight:
        """Current belief for a key; unobserved keys carry the prior."""
        gw = self.weights.get(key)
        if gw is None:
            return GaussianWeight(self.prior_mean, self.prior_variance)
        return GaussianWeight(gw.mean, gw.variance)

    def active_keys(self, item) -> tuple:
        return item_keys(item)

    def _sums(self, keys):
        mean_sum = 0.0
        var_sum = 0.0
        for key in keys:
            gw = self.weights.get(key)
            if gw is None:
                mean_sum += self.prior_mean
                var_sum += self.prior_variance
            else:
                mean_sum += gw.mean
                var_sum += gw.variance
        return mean_sum, var_sum

    # -- prediction ------------------------------------------------------

    def predict_ctr(self, item) -> float:
        mean_sum, var_sum = self._sums(item_keys(item))
        z = mean_sum / math.sqrt(self.noise_scale**2 + var_sum)
        return min(max(float(ndtr(z)), _P_FLOOR), _P_CEIL)

    def thompson_scores(self, items, seed) -> np.ndarray:
        """One posterior draw per key, shared across items, per call.

        ``seed`` may be an int or a numpy Generator; identical seeds give
        identical score vectors.
        """
        rng = np.random.default_rng(seed)
        key_lists = [item_keys(item) for item in items]
        all_keys = sorted({key for keys in key_lists for key in keys})
        means = np.empty(len(all_keys))
        stds = np.empty(len(all_keys))
        for i, key in enumerate(all_keys):
            gw = self.weights.get(key)
            if gw is None:
                means[i] = self.prior_mean
                stds[i] = math.sqrt(self.prior_variance)
            else:
                means[i] = gw.mean
                stds[i] = math.sqrt(gw.variance)
        draws = means + stds * rng.standard_normal(len(all_keys))
        index = {key: i for i, key in enumerate(all_keys)}
        scores = np.empty(len(items))
        for j, keys in enumerate(key_lists):
            total = sum(draws[index[key]] for key in keys)
            scores[j] = ndtr(total / self.noise_scale)
        return np.clip(scores, _P_FLOOR, _P_CEIL)

    # -- learning --------------------------------------------------------

    def update(self, obs: Observation):
        """Moment-matching update of every active weight, in place."""
        weights = []
        for key in obs.keys:
            gw = self.weights.get(key)
            if gw is None:
                gw = GaussianWeight(self.prior_mean, self.prior_variance)
                self.weights[key] = gw
            weights.append(gw)

        y = 1.0 if obs.clicked else -1.0
        mean_sum = sum(gw.mean for gw in weights)
        total_var = self.noise_scale**2 + sum(gw.variance for gw in weights)
        total_std = math.sqrt(total_var)
        t = y * mean_sum / total_std
        v = _gauss_over_cdf(t)
        shrink = _shrink(t)
        for gw in weights:
            gw.mean += y * (gw.variance / total_std) * v
            gw.variance *= max(1.0 - (gw.variance / total_var) * shrink, _VAR_FACTOR_FLOOR)
        self.version += 1

    def update_many(self, observations):
        for obs in observations:
            self.update(obs)

    # -- persistence -----------------------------------------------------

    def copy(self) -> "ClickModel":
        clone = ClickModel(self.prior_mean, self.prior_variance, self.noise_scale)
        clone.weights = {
            key: GaussianWeight(gw.mean, gw.variance) for key, gw in self.weights.items()
        }
        clone.version = self.version
        return clone

    def snapshot(self) -> bytes:
        """Versioned, checksummed JSON; floats round-trip bit-exactly."""
        payload = {
            "format_version": SNAPSHOT_VERSION,
            "prior_mean": self.prior_mean,
            "prior_variance": self.prior_variance,
            "noise_scale": self.noise_scale,
            "model_version": self.version,
            "weights": {
                key: [gw.mean, gw.variance] for key, gw in sorted(self.weights.items())
            },
        }
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return json.dumps({"payload": payload, "sha256": digest}, sort_keys=True).encode(
            "utf-8"
        )

    @classmethod
    def restore(cls, blob: bytes) -> "ClickModel":
        try:
            wrapper = json.loads(blob.decode("utf-8"))
            payload = wrapper["payload"]
            claimed = wrapper["sha256"]
        except (ValueError, KeyError, AttributeError) as exc:
            raise SnapshotError(f"unreadable snapshot: {exc}") from exc
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != claimed:
            raise SnapshotError("snapshot checksum mismatch")
        if payload.get("format_version") != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"unsupported snapshot format {payload.get('format_version')}"
            )
        model = cls(
            prior_mean=payload["prior_mean"],
            prior_variance=payload["prior_variance"],
            noise_scale=payload["noise_scale"],
        )
        model.weights = {
            key: GaussianWeight(mean, variance)
            for key, (mean, variance) in payload["weights"].items()
        }
        model.version = int(payload.get("model_version", 0))
        return model


class CatalogScorer:
    """Vectorized scoring over a fixed item list and a fixed model state.

    Captures the weight table into flat arrays at construction; rebuild
    after the model or the item list changes. Used on hot paths (service
    and simulator) where per-item Python dictionaries are too slow.
    """

    def __init__(self, model: ClickModel, items):
        self.noise_scale = model.noise_scale
        self.n_items = len(items)
        key_lists = [item_keys(item) for item in items]
        all_keys = sorted({key for keys in key_lists for key in keys})
        self._key_index = {key: i for i, key in enumerate(all_keys)}
        self.means = np.empty(len(all_keys))
        variances = np.empty(len(all_keys))
        for i, key in enumerate(all_keys):
            gw = model.weights.get(key)
            if gw is None:
                self.means[i] = model.prior_mean
                variances[i] = model.prior_variance
            else:
                self.means[i] = gw.mean
                variances[i] = gw.variance
        self.stds = np.sqrt(variances)
        self.variances = variances
        flat = []
        offsets = [0]
        for keys in key_lists:
            flat.extend(self._key_index[key] for key in keys)
            offsets.append(len(flat))
        self._flat = np.asarray(flat, dtype=np.intp)
        self._offsets = np.asarray(offsets[:-1], dtype=np.intp)

    def _item_sums(self, values: np.ndarray) -> np.ndarray:
        if self.n_items == 0:
            return np.empty(0)
        return np.add.reduceat(values[self._flat], self._offsets)

    def thompson(self, rng) -> np.ndarray:
        draws = self.means + self.stds * rng.standard_normal(len(self.means))
        scores = ndtr(self._item_sums(draws) / self.noise_scale)
        return np.clip(scores, _P_FLOOR, _P_CEIL)

    def mean_ctr(self) -> np.ndarray:
        mean_sums = self._item_sums(self.means)
        var_sums = self._item_sums(self.variances)
        scores = ndtr(mean_sums / np.sqrt(self.noise_scale**2 + var_sums))
        return np.clip(scores, _P_FLOOR, _P_CEIL)
