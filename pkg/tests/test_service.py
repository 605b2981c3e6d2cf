import json

import pytest
from fastapi.testclient import TestClient

from streamrank.service import Engine, ServiceConfig, create_app
from streamrank.simulator import CatalogSpec, gen_catalog_records
from streamrank.catalog import synthetic_scheme


D = 6


@pytest.fixture
def data_dir(tmp_path):
    catalog_path = tmp_path / "catalog.jsonl"
    scheme_path = tmp_path / "scheme.json"
    records = gen_catalog_records(CatalogSpec(n_items=150, d=D), seed=0)
    catalog_path.write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    )
    scheme_path.write_text(json.dumps(synthetic_scheme(D).to_dict()))
    data = tmp_path / "data"
    engine = Engine(data)
    engine.ingest_catalog(catalog_path, scheme_path)
    return data


@pytest.fixture
def client(data_dir):
    app = create_app(data_dir, ServiceConfig(page_size=20, window_pages=3))
    return TestClient(app)


def view_then_click(client, user_id, items, click_kind="favorite"):
    events = []
    for item in items:
        events.append({"user_id": user_id, "item_id": item["item_id"],
                       "event": "view", "ts": 1.0})
        events.append({"user_id": user_id, "item_id": item["item_id"],
                       "event": click_kind, "ts": 1.0})
    resp = client.post("/v1/events", json=events)
    assert resp.status_code == 200
    return resp.json()


class TestStream:
    def test_page_of_requested_size_with_contiguous_ranks(self, client):
        resp = client.get("/v1/stream", params={"user_id": "u1", "page": 0, "size": 20})
        assert resp.status_code == 200
        body = resp.json()
        items = body["items"]
        assert len(items) == 20
        assert [card["rank"] for card in items] == list(range(1, 21))
        assert len({card["item_id"] for card in items}) == 20

    def test_same_request_returns_identical_page(self, client):
        a = client.get("/v1/stream", params={"user_id": "u1", "page": 1}).json()
        b = client.get("/v1/stream", params={"user_id": "u1", "page": 1}).json()
        assert a == b

    def test_distinct_users_get_distinct_draws(self, client):
        a = client.get("/v1/stream", params={"user_id": "u1", "page": 0}).json()
        b = client.get("/v1/stream", params={"user_id": "u2", "page": 0}).json()
        assert [i["item_id"] for i in a["items"]] != [i["item_id"] for i in b["items"]]

    def test_no_duplicates_across_window_pages(self, client):
        seen = []
        for page in range(3):
            body = client.get(
                "/v1/stream", params={"user_id": "u1", "page": page, "size": 20}
            ).json()
            seen.extend(card["item_id"] for card in body["items"])
        assert len(seen) == len(set(seen)) == 60

    def test_bad_params_rejected(self, client):
        assert client.get("/v1/stream", params={"page": -1}).status_code == 400
        assert client.get("/v1/stream", params={"size": 0}).status_code == 400

    def test_unready_service_returns_503(self, tmp_path):
        app = create_app(tmp_path / "empty")
        empty_client = TestClient(app)
        assert empty_client.get("/v1/stream").status_code == 503
        health = empty_client.get("/v1/health").json()
        assert health["ready"] is False


class TestEvents:
    def test_click_subtypes_update_profile(self, client):
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u9"}).json()["items"]
        for kind, item in zip(("favorite", "detail_page", "modal"), page):
            view_then_click(client, "u9", [item], click_kind=kind)
        assert engine.profiles["u9"].total_clicks == 3

    def test_view_events_touch_counters_not_profiles(self, client):
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u3"}).json()["items"]
        events = [{"user_id": "u3", "item_id": card["item_id"], "event": "view"}
                  for card in page]
        before = engine.stats.views.sum()
        client.post("/v1/events", json=events)
        assert engine.stats.views.sum() == before + len(events)
        assert "u3" not in engine.profiles

    def test_duplicate_event_id_deduplicated(self, client):
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u4"}).json()["items"]
        event = {"user_id": "u4", "item_id": page[0]["item_id"],
                 "event": "favorite", "ts": 2.0, "event_id": "evt-1"}
        first = client.post("/v1/events", json=[event]).json()
        second = client.post("/v1/events", json=[event]).json()
        assert first["accepted"] == 1
        assert second["accepted"] == 0 and second["deduplicated"] == 1
        assert engine.profiles["u4"].total_clicks == 1

    def test_unknown_item_accepted_with_warning(self, client):
        resp = client.post("/v1/events", json=[
            {"user_id": "u5", "item_id": "ghost", "event": "view"}
        ]).json()
        assert resp["accepted"] == 1
        assert resp["unknown_items"] == 1

    def test_unknown_event_type_rejected(self, client):
        resp = client.post("/v1/events", json=[
            {"user_id": "u5", "item_id": "x", "event": "purchase"}
        ])
        assert resp.status_code == 400


class TestRefresh:
    def test_empty_backlog_advances_generation(self, client):
        health = client.get("/v1/health").json()
        resp = client.post("/v1/admin/refresh").json()
        assert resp["model_generation"] == health["model_generation"] + 1
        assert resp["observations_applied"] == 0

    def test_clicks_feed_weights_monotonically(self, client):
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u6"}).json()["items"]
        category = page[0]["category"]
        before = engine.global_w[category]
        view_then_click(client, "u6", [page[0]])
        client.post("/v1/admin/refresh")
        after = client.app.state.engine.global_w[category]
        assert after > before

    def test_refresh_changes_predictions_after_clicks(self, client):
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u7"}).json()["items"]
        item = engine.catalog.get(page[0]["item_id"])
        before = engine.model.predict_ctr(item)
        view_then_click(client, "u7", page[:3])
        client.post("/v1/admin/refresh").json()
        after = engine.model.predict_ctr(item)
        assert after > before

    def test_concurrent_refresh_rejected(self, client):
        engine = client.app.state.engine
        assert engine._refresh_lock.acquire(blocking=False)
        try:
            assert client.post("/v1/admin/refresh").status_code == 409
        finally:
            engine._refresh_lock.release()


class TestWeightsEndpoint:
    def test_global_weights_and_user_view(self, client):
        page = client.get("/v1/stream", params={"user_id": "u8"}).json()["items"]
        view_then_click(client, "u8", page[:12])
        body = client.get("/v1/admin/weights", params={"user_id": "u8"}).json()
        assert body["d"] == D
        assert len(body["global"]) == D
        user = body["user"]
        assert user["clicks"] == 12
        assert user["personalized"] is True
        assert sum(user["weights"]) == pytest.approx(1.0, abs=1e-9)

    def test_below_threshold_user_gets_global(self, client):
        page = client.get("/v1/stream", params={"user_id": "u10"}).json()["items"]
        view_then_click(client, "u10", page[:3])
        body = client.get("/v1/admin/weights", params={"user_id": "u10"}).json()
        assert body["user"]["personalized"] is False
        assert body["user"]["weights"] == body["global"]


class TestRecovery:
    def test_restart_replays_to_identical_predictions(self, data_dir):
        app = create_app(data_dir, ServiceConfig(page_size=20))
        client = TestClient(app)
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u1", "size": 20}).json()["items"]
        view_then_click(client, "u1", page[:6])
        client.post("/v1/admin/refresh")
        view_then_click(client, "u1", page[6:10])  # unapplied tail
        probes = [engine.catalog.get(card["item_id"]) for card in page]
        expected = [engine.model.predict_ctr(item) for item in probes]

        reborn = Engine(data_dir, ServiceConfig(page_size=20))
        got = [reborn.model.predict_ctr(item) for item in probes]
        assert got == expected
        assert reborn.applied_offset == engine.applied_offset
        assert reborn.log_offset == engine.log_offset
        # profiles came back from the log replay
        assert reborn.profiles["u1"].total_clicks == 10

    def test_cold_replay_equals_warm_path(self, data_dir):
        """A fresh engine that replays the log and refreshes must match the
        engine that lived through the events."""
        app = create_app(data_dir, ServiceConfig(page_size=20))
        client = TestClient(app)
        engine = client.app.state.engine
        page = client.get("/v1/stream", params={"user_id": "u2", "size": 20}).json()["items"]
        view_then_click(client, "u2", page[:5])
        client.post("/v1/admin/refresh")
        snapshot_a = engine.model.snapshot()

        state_path = data_dir / "state.json"
        model_path = data_dir / "model_snapshot.json"
        state_path.unlink()
        model_path.unlink()
        reborn = Engine(data_dir, ServiceConfig(page_size=20))
        reborn.refresh()
        assert reborn.model.snapshot() == snapshot_a
