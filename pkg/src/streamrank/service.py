"""HTTP facade: stream pages, event ingestion, and model refresh.

Serving reads immutable snapshots (catalog, click model, weight vectors);
refresh builds replacements off to the side and swaps them atomically, so
the read path never blocks. Every accepted event is appended to a durable
JSON-lines log; the click model consumes the log in batches at refresh
time (delayed feedback), while per-user profiles and view counters update
synchronously. Restarting a service on the same data directory replays
the log deterministically, reproducing the same model state.

Endpoints (all JSON; schemas in docs/API.md):
    GET  /v1/stream?user_id=&page=&size=
    POST /v1/events
    POST /v1/admin/refresh
    GET  /v1/admin/weights?user_id=
    GET  /v1/health
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from collections import OrderedDict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .catalog import Catalog, CatalogError, CategoryScheme, load_catalog
from .click_model import CatalogScorer, ClickModel, Observation, item_keys
from .diversifier import celf_select_arrays
from .weights import (
    CategoryStats,
    DecayPolicy,
    DirichletPrior,
    SmoothingPriors,
    UserProfile,
    build_co_interest,
    effective_weights,
    global_weights,
)

CLICK_EVENTS = ("favorite", "detail_page", "modal")
VALID_EVENTS = ("view",) + CLICK_EVENTS

CATALOG_FILE = "catalog.jsonl"
SCHEME_FILE = "scheme.json"
EVENTS_FILE = "events.jsonl"
MODEL_SNAPSHOT_FILE = "model_snapshot.json"
WEIGHTS_SNAPSHOT_FILE = "weights_snapshot.json"
STATE_FILE = "state.json"


class EventIn(BaseModel):
    user_id: str
    item_id: str
    event: str
    ts: float | None = None
    event_id: str | None = None


class ServiceConfig(BaseModel):
    page_size: int = 60
    window_pages: int = 10
    score_scale: float = 1.0
    smoothing_alpha: float = 1.0
    smoothing_beta: float = 9.0
    dirichlet_strength: float = 1.0
    co_interest_top_k: int = 5
    min_personalization_clicks: int = 10
    profile_window: int = 200
    session_cache_size: int = 512


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class Engine:
    """Service state machine behind the HTTP handlers."""

    def __init__(self, data_dir, config: ServiceConfig | None = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or ServiceConfig()
        self.priors = SmoothingPriors(self.config.smoothing_alpha,
                                      self.config.smoothing_beta)
        self.decay_policy = DecayPolicy(max_events=self.config.profile_window)

        self.catalog: Catalog | None = None
        self.model = ClickModel()
        self.scorer: CatalogScorer | None = None
        self.stats = CategoryStats.zeros(1)
        self.global_w = global_weights(self.stats, self.priors)
        self.co_interest = np.eye(1)
        self.prior = DirichletPrior.uniform(1, self.config.dirichlet_strength)
        self.profiles: dict = {}
        self.seen_event_ids: set = set()
        self.applied_offset = 0          # events consumed by the click model
        self.log_offset = 0              # events appended so far
        self.model_generation = 0
        self.weights_generation = 0

        self._log_lock = threading.Lock()
        self._refresh_lock = threading.Lock()
        self._session_cache: OrderedDict = OrderedDict()
        self._rng = np.random.default_rng()

        self._load()

    # -- startup / recovery ----------------------------------------------

    def _load(self):
        scheme_path = self.data_dir / SCHEME_FILE
        catalog_path = self.data_dir / CATALOG_FILE
        if scheme_path.exists() and catalog_path.exists():
            scheme = CategoryScheme.from_file(scheme_path)
            self.catalog = load_catalog(catalog_path, scheme)
            self._reset_learning(scheme.d)
            snapshot_path = self.data_dir / MODEL_SNAPSHOT_FILE
            state_path = self.data_dir / STATE_FILE
            if snapshot_path.exists() and state_path.exists():
                self.model = ClickModel.restore(snapshot_path.read_bytes())
                state = json.loads(state_path.read_text())
                self.applied_offset = int(state["applied_offset"])
                self.model_generation = int(state["model_generation"])
                self.weights_generation = int(state["weights_generation"])
            self._replay_log()
            self.scorer = CatalogScorer(self.model, self.catalog.items)

    def _reset_learning(self, d: int):
        self.stats = CategoryStats.zeros(d)
        self.global_w = global_weights(self.stats, self.priors)
        self.co_interest = np.eye(d)
        self.prior = DirichletPrior.uniform(d, self.config.dirichlet_strength)
        self.profiles = {}

    def _replay_log(self):
        """Rebuild synchronous state (stats, profiles, dedupe set) from the
        full log; weight vectors come from the recorded refresh points."""
        path = self.data_dir / EVENTS_FILE
        self.log_offset = 0
        if not path.exists():
            return
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self.log_offset += 1
                self._absorb(record)
        self.global_w = global_weights(self.stats, self.priors)
        self._rebuild_co_interest()

    def _absorb(self, record: dict):
        """Synchronous effects of one logged event (not the click model)."""
        event_id = record.get("event_id")
        if event_id is not None:
            self.seen_event_ids.add(event_id)
        category = record.get("category")
        if category is None:
            return
        category = int(category)
        if record["event"] == "view":
            self.stats.add_view(category)
        else:
            self.stats.add_click(category)
            profile = self.profiles.get(record["user_id"])
            if profile is None:
                profile = UserProfile(record["user_id"], self.stats.d)
                self.profiles[record["user_id"]] = profile
            profile.record_click(category, float(record.get("ts") or 0.0))
            profile.decay(self.decay_policy)

    def _rebuild_co_interest(self):
        user_clicks = {}
        for uid, profile in self.profiles.items():
            nonzero = np.nonzero(profile.click_counts)[0]
            if len(nonzero):
                user_clicks[uid] = {
                    int(c): float(profile.click_counts[c]) for c in nonzero
                }
        if user_clicks:
            self.co_interest = build_co_interest(
                user_clicks, self.stats.d, self.config.co_interest_top_k
            )

    # -- catalog ingestion -------------------------------------------------

    def ingest_catalog(self, catalog_path, scheme_path) -> dict:
        """Validate a catalog + scheme pair and install it in the data dir."""
        scheme = CategoryScheme.from_file(scheme_path)
        catalog = load_catalog(catalog_path, scheme)
        _atomic_write(self.data_dir / SCHEME_FILE,
                      json.dumps(scheme.to_dict()).encode())
        _atomic_write(self.data_dir / CATALOG_FILE,
                      Path(catalog_path).read_bytes())
        self.catalog = catalog
        self._reset_learning(scheme.d)
        self._replay_log()
        self.scorer = CatalogScorer(self.model, self.catalog.items)
        self._session_cache.clear()
        return {"items": len(catalog), "d": scheme.d}

    # -- read path ---------------------------------------------------------

    @property
    def ready(self) -> bool:
        return self.catalog is not None and self.scorer is not None

    def _ranking_for(self, user_id: str, size: int, window_index: int,
                     window_len: int) -> list:
        cache_key = (user_id, self.model_generation, self.weights_generation,
                     size, window_index)
        ranking = self._session_cache.get(cache_key)
        if ranking is not None:
            self._session_cache.move_to_end(cache_key)
            return ranking

        scores = self.scorer.thompson(self._rng)
        profile = self.profiles.get(user_id)
        w = effective_weights(
            profile, self.global_w, self.co_interest, self.prior,
            self.config.min_personalization_clicks,
        )
        item_ids = [item.item_id for item in self.catalog.items]
        cats = [item.category for item in self.catalog.items]
        chosen = celf_select_arrays(
            item_ids, cats, scores, w, window_len, self.config.score_scale
        )
        ranking = [
            {
                "item_id": self.catalog.items[i].item_id,
                "category": self.catalog.items[i].category,
                "score": float(scores[i]),
            }
            for i in chosen
        ]
        self._session_cache[cache_key] = ranking
        while len(self._session_cache) > self.config.session_cache_size:
            self._session_cache.popitem(last=False)
        return ranking

    def stream_page(self, user_id: str, page: int, size: int) -> dict:
        """One page out of a diversification window.

        A window is one Thompson draw diversified over up to
        ``window_pages * size`` items; pages slice it. Requests beyond the
        window open the next window with a fresh draw. Identical
        (user, generation, page, size) requests return identical pages.
        """
        if not self.ready:
            raise HTTPException(status_code=503, detail="no catalog loaded yet")
        if page < 0 or size < 1 or size > 500:
            raise HTTPException(status_code=400, detail="bad page or size")
        window_len = min(size * self.config.window_pages, len(self.catalog))
        pages_per_window = max(1, math.ceil(window_len / size))
        window_index, page_in_window = divmod(page, pages_per_window)
        ranking = self._ranking_for(user_id, size, window_index, window_len)
        start = page_in_window * size
        cards = [
            {**entry, "rank": rank + 1}
            for rank, entry in enumerate(ranking[start:start + size])
        ]
        return {
            "user_id": user_id,
            "page": page,
            "size": size,
            "model_generation": self.model_generation,
            "weights_generation": self.weights_generation,
            "items": cards,
        }

    # -- write path ----------------------------------------------------------

    def ingest_events(self, events: list) -> dict:
        if not self.ready:
            raise HTTPException(status_code=503, detail="no catalog loaded yet")
        accepted = 0
        deduplicated = 0
        unknown_items = 0
        with self._log_lock:
            with open(self.data_dir / EVENTS_FILE, "a", encoding="utf-8") as fh:
                for event in events:
                    if event.event not in VALID_EVENTS:
                        raise HTTPException(
                            status_code=400,
                            detail=f"unknown event type {event.event!r}",
                        )
                    if event.event_id is not None and event.event_id in self.seen_event_ids:
                        deduplicated += 1
                        continue
                    item = self.catalog.get(event.item_id)
                    if item is None:
                        unknown_items += 1
                    record = {
                        "user_id": event.user_id,
                        "item_id": event.item_id,
                        "category": None if item is None else item.category,
                        "event": "view" if event.event == "view" else "click",
                        "subtype": event.event,
                        "ts": time.time() if event.ts is None else event.ts,
                        "event_id": event.event_id,
                    }
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
                    self.log_offset += 1
                    self._absorb(record)
                    accepted += 1
        return {
            "accepted": accepted,
            "deduplicated": deduplicated,
            "unknown_items": unknown_items,
        }

    def refresh(self) -> dict:
        if not self.ready:
            raise HTTPException(status_code=503, detail="no catalog loaded yet")
        if not self._refresh_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="refresh already in progress")
        try:
            return self._refresh_locked()
        finally:
            self._refresh_lock.release()

    def _read_log_slice(self, start: int) -> list:
        records = []
        path = self.data_dir / EVENTS_FILE
        if not path.exists():
            return records
        with open(path, "r", encoding="utf-8") as fh:
            for offset, line in enumerate(fh):
                if offset < start:
                    continue
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def _refresh_locked(self) -> dict:
        backlog = self._read_log_slice(self.applied_offset)
        new_model = self.model.copy()
        applied = 0
        # one observation per view; clicked if the same (user, item) clicked
        # anywhere in the batch; clicks with no view in the batch are lone
        # positives (a click without a logged view is tolerated)
        clicked_pairs = set()
        viewed_pairs = set()
        for record in backlog:
            if record.get("category") is None:
                continue
            key = (record["user_id"], record["item_id"])
            if record["event"] == "click":
                clicked_pairs.add(key)
            else:
                viewed_pairs.add(key)
        for record in backlog:
            if record.get("category") is None:
                continue
            key = (record["user_id"], record["item_id"])
            item = self.catalog.get(record["item_id"])
            if item is None:
                continue
            if record["event"] == "view":
                new_model.update(Observation(item_keys(item), key in clicked_pairs))
                applied += 1
            elif key not in viewed_pairs:
                new_model.update(Observation(item_keys(item), True))
                applied += 1

        new_scorer = CatalogScorer(new_model, self.catalog.items)
        new_global = global_weights(self.stats, self.priors)

        self.model = new_model
        self.scorer = new_scorer
        self.global_w = new_global
        self._rebuild_co_interest()
        self.applied_offset += len(backlog)
        self.model_generation += 1
        self.weights_generation += 1
        self._session_cache.clear()

        _atomic_write(self.data_dir / MODEL_SNAPSHOT_FILE, self.model.snapshot())
        _atomic_write(
            self.data_dir / WEIGHTS_SNAPSHOT_FILE,
            json.dumps(
                {
                    "generation": self.weights_generation,
                    "global": self.global_w.tolist(),
                    "co_interest": self.co_interest.tolist(),
                },
                sort_keys=True,
            ).encode(),
        )
        _atomic_write(
            self.data_dir / STATE_FILE,
            json.dumps(
                {
                    "applied_offset": self.applied_offset,
                    "model_generation": self.model_generation,
                    "weights_generation": self.weights_generation,
                },
                sort_keys=True,
            ).encode(),
        )
        return {
            "model_generation": self.model_generation,
            "weights_generation": self.weights_generation,
            "observations_applied": applied,
        }

    # -- introspection ---------------------------------------------------

    def weights_view(self, user_id: str | None) -> dict:
        if not self.ready:
            raise HTTPException(status_code=503, detail="no catalog loaded yet")
        out = {
            "generation": self.weights_generation,
            "global": self.global_w.tolist(),
            "co_interest": self.co_interest.tolist(),
            "d": self.stats.d,
        }
        if user_id:
            profile = self.profiles.get(user_id)
            clicks = 0 if profile is None else profile.total_clicks
            personalized = clicks >= self.config.min_personalization_clicks
            w = effective_weights(
                profile, self.global_w, self.co_interest, self.prior,
                self.config.min_personalization_clicks,
            )
            out["user"] = {
                "user_id": user_id,
                "clicks": clicks,
                "personalized": personalized,
                "weights": np.asarray(w, dtype=float).tolist(),
            }
        return out

    def health(self) -> dict:
        return {
            "status": "ok" if self.ready else "empty",
            "ready": self.ready,
            "items": 0 if self.catalog is None else len(self.catalog),
            "model_generation": self.model_generation,
            "weights_generation": self.weights_generation,
            "events_logged": self.log_offset,
            "events_applied": self.applied_offset,
        }


def create_app(data_dir=None, config: ServiceConfig | None = None) -> FastAPI:
    data_dir = data_dir or os.environ.get("ENGINE_DATA_DIR", "./engine-data")
    engine = Engine(data_dir, config)
    app = FastAPI(title="streamrank", version="0.1.0")
    app.state.engine = engine

    @app.get("/v1/stream")
    def stream(user_id: str = Query(default=""), page: int = 0, size: int | None = None):
        if size is None:
            size = engine.config.page_size
        return engine.stream_page(user_id, page, size)

    @app.post("/v1/events")
    def events(batch: list[EventIn]):
        return engine.ingest_events(batch)

    @app.post("/v1/admin/refresh")
    def refresh():
        return engine.refresh()

    @app.get("/v1/admin/weights")
    def weights(user_id: str | None = None):
        return engine.weights_view(user_id)

    @app.get("/v1/health")
    def health():
        return engine.health()

    return app
