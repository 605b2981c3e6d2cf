"""End-to-end service loop without leaving Python: ingest a catalog, browse,
click, refresh, and watch personalization take over the stream.

Uses the FastAPI test client; `engine serve` exposes the same app over a
real socket.
"""

import collections
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from streamrank.catalog import synthetic_scheme
from streamrank.service import Engine, ServiceConfig, create_app
from streamrank.simulator import CatalogSpec, gen_catalog_records

workdir = Path(tempfile.mkdtemp(prefix="streamrank-demo-"))
catalog_path = workdir / "catalog.jsonl"
scheme_path = workdir / "scheme.json"
d = 8
records = gen_catalog_records(CatalogSpec(n_items=300, d=d), seed=1)
catalog_path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
scheme_path.write_text(json.dumps(synthetic_scheme(d).to_dict()))

data_dir = workdir / "data"
Engine(data_dir).ingest_catalog(catalog_path, scheme_path)
client = TestClient(create_app(data_dir, ServiceConfig(page_size=24)))

print("health:", client.get("/v1/health").json())


def category_mix(cards):
    counts = collections.Counter(card["category"] for card in cards)
    return " ".join(f"c{cat}:{n}" for cat, n in sorted(counts.items()))


page = client.get("/v1/stream", params={"user_id": "demo", "page": 0}).json()
print(f"\nfirst page mix (global weights):   {category_mix(page['items'])}")

# the shopper loves category of the first card; click 12 items from it
target = page["items"][0]["category"]
loved = [c for c in page["items"] if c["category"] == target]
for extra_page in range(1, 6):
    more = client.get("/v1/stream",
                      params={"user_id": "demo", "page": extra_page}).json()
    loved += [c for c in more["items"] if c["category"] == target]
events = []
for card in loved[:12]:
    events.append({"user_id": "demo", "item_id": card["item_id"], "event": "view"})
    events.append({"user_id": "demo", "item_id": card["item_id"], "event": "favorite"})
print(f"posting {len(events)} events (12 favorites in category {target})")
client.post("/v1/events", json=events)
print("refresh:", client.post("/v1/admin/refresh").json())

weights = client.get("/v1/admin/weights", params={"user_id": "demo"}).json()
print(f"\npersonalized: {weights['user']['personalized']} "
      f"after {weights['user']['clicks']} clicks")
print("user weights:",
      " ".join(f"c{i}:{w:.2f}" for i, w in enumerate(weights["user"]["weights"])))

page2 = client.get("/v1/stream", params={"user_id": "demo", "page": 0}).json()
mix = collections.Counter(card["category"] for card in page2["items"])
print(f"\nnext page mix (personalized):      {category_mix(page2['items'])}")
print(f"loved category holds {mix[target]}/{len(page2['items'])} slots: more than "
      "before, but diffusion and the log-saturation keep other categories alive.")
