"""Item catalog: loading, validation, churn, and category assignment.

Items carry categorical attributes (brand, color, department, price band,
size, plus the item id itself as its own attribute). A ``CategoryScheme``
maps every item to exactly one coarse category; the diversifier operates
on those categories rather than on the raw attribute space.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

UNKNOWN = "unknown"

# Default price coarsening: 5 edges -> 6 bands.
DEFAULT_PRICE_BAND_EDGES = (10.0, 25.0, 50.0, 100.0, 200.0)

PRICE_BAND_ATTRIBUTE = "price_band"
ITEM_ID_ATTRIBUTE = "item_id"


class CatalogError(ValueError):
    """Malformed catalog input or a scheme misconfiguration."""


@dataclass(frozen=True)
class Item:
    """One catalog entry.

    ``attributes`` maps attribute name to categorical value and always
    includes the item id under the ``item_id`` key. ``category`` is the
    coarse diversification category assigned by the scheme.
    """

    item_id: str
    attributes: dict
    category: int

    def __post_init__(self):
        if not self.item_id:
            raise CatalogError("item_id must be non-empty")
        if self.category < 0:
            raise CatalogError(f"negative category for {self.item_id!r}")


@dataclass(frozen=True)
class CategoryRule:
    """Ordered matching rule: all listed attribute values must match."""

    match: dict
    category: int


@dataclass(frozen=True)
class CategoryScheme:
    """Total, ordered first-match mapping from attributes to a category.

    Rules may overlap; the first matching rule wins, which keeps the
    mapping deterministic and mutually exclusive even for sloppy rule
    sets. A final catch-all rule (empty ``match``) makes a scheme total.
    """

    d: int
    attributes: tuple
    rules: tuple
    price_band_edges: tuple = DEFAULT_PRICE_BAND_EDGES

    def __post_init__(self):
        if self.d < 1:
            raise CatalogError("scheme needs at least one category")
        produced = set()
        for rule in self.rules:
            if not 0 <= rule.category < self.d:
                raise CatalogError(
                    f"rule category {rule.category} outside 0..{self.d - 1}"
                )
            if ITEM_ID_ATTRIBUTE in rule.match:
                raise CatalogError("rules must not match on item_id")
            for name in rule.match:
                if name not in self.attributes:
                    raise CatalogError(f"rule matches unknown attribute {name!r}")
            produced.add(rule.category)
        if len(produced) != self.d:
            raise CatalogError(
                f"rules produce {len(produced)} categories, scheme declares {self.d}"
            )

    def price_band(self, price) -> str:
        if price is None:
            return UNKNOWN
        return f"band{bisect_right(self.price_band_edges, float(price))}"

    @classmethod
    def from_file(cls, path) -> "CategoryScheme":
        raw = json.loads(Path(path).read_text())
        rules = tuple(
            CategoryRule(match=dict(r["match"]), category=int(r["category"]))
            for r in raw["rules"]
        )
        return cls(
            d=int(raw["d"]),
            attributes=tuple(raw["attributes"]),
            rules=rules,
            price_band_edges=tuple(raw.get("price_band_edges", DEFAULT_PRICE_BAND_EDGES)),
        )

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "attributes": list(self.attributes),
            "price_band_edges": list(self.price_band_edges),
            "rules": [{"match": dict(r.match), "category": r.category} for r in self.rules],
        }


def synthetic_scheme(d: int = 100, price_band_edges=DEFAULT_PRICE_BAND_EDGES) -> CategoryScheme:
    """One category per synthetic department, ``dept0 .. dept{d-1}``."""
    rules = tuple(
        CategoryRule(match={"department": f"dept{j}"}, category=j) for j in range(d)
    )
    return CategoryScheme(
        d=d,
        attributes=("brand", "color", "department", PRICE_BAND_ATTRIBUTE, "size"),
        rules=rules,
        price_band_edges=tuple(price_band_edges),
    )


def categorize(item: Item, scheme: CategoryScheme) -> int:
    """First matching rule wins. Raises if no rule matches (scheme not total)."""
    attrs = item.attributes
    for rule in scheme.rules:
        if all(attrs.get(name) == value for name, value in rule.match.items()):
            return rule.category
    raise CatalogError(
        f"no rule matches item {item.item_id!r}; scheme is not total"
    )


def encode_attributes(item_id: str, raw_attributes: dict, price, scheme: CategoryScheme) -> dict:
    """Complete attribute map for one item under a scheme.

    Attribute names outside the scheme are rejected; scheme attributes the
    item lacks are filled with the explicit ``unknown`` token. The price
    band is always recomputed from the numeric price.
    """
    allowed = set(scheme.attributes)
    for name in raw_attributes:
        if name not in allowed or name == PRICE_BAND_ATTRIBUTE:
            raise CatalogError(f"unknown attribute {name!r} for scheme")
    attrs = {name: str(raw_attributes.get(name, UNKNOWN)) for name in scheme.attributes}
    if PRICE_BAND_ATTRIBUTE in allowed:
        attrs[PRICE_BAND_ATTRIBUTE] = scheme.price_band(price)
    attrs[ITEM_ID_ATTRIBUTE] = item_id
    return attrs


def make_item(item_id: str, raw_attributes: dict, price, scheme: CategoryScheme) -> Item:
    attrs = encode_attributes(item_id, raw_attributes, price, scheme)
    probe = Item(item_id=item_id, attributes=attrs, category=0)
    return Item(item_id=item_id, attributes=attrs, category=categorize(probe, scheme))


@dataclass(frozen=True)
class Catalog:
    """Immutable item collection; ``apply_delta`` returns a new value."""

    items: tuple
    scheme: CategoryScheme
    generation: int = 0
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for item in self.items:
            if item.item_id in index:
                raise CatalogError(f"duplicate item_id {item.item_id!r}")
            if item.category >= self.scheme.d:
                raise CatalogError(
                    f"item {item.item_id!r} category {item.category} >= d={self.scheme.d}"
                )
            index[item.item_id] = item
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.items)

    def __contains__(self, item_id):
        return item_id in self._index

    def get(self, item_id):
        return self._index.get(item_id)

    def by_category(self) -> dict:
        groups = {}
        for item in self.items:
            groups.setdefault(item.category, []).append(item)
        return groups


@dataclass(frozen=True)
class DeltaResult:
    """Outcome of one catalog churn step."""

    catalog: Catalog
    ignored_purge_ids: tuple

    @property
    def warning_count(self) -> int:
        return len(self.ignored_purge_ids)


def load_catalog(path, scheme: CategoryScheme) -> Catalog:
    """Read a JSON-lines catalog file; every error names its line number."""
    items = []
    seen_lines = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CatalogError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or "item_id" not in record:
                raise CatalogError(f"line {lineno}: missing item_id")
            item_id = str(record["item_id"])
            if not item_id:
                raise CatalogError(f"line {lineno}: empty item_id")
            if item_id in seen_lines:
                raise CatalogError(
                    f"duplicate item_id {item_id!r} on lines "
                    f"{seen_lines[item_id]} and {lineno}"
                )
            seen_lines[item_id] = lineno
            try:
                item = make_item(
                    item_id,
                    record.get("attributes", {}),
                    record.get("price"),
                    scheme,
                )
            except CatalogError as exc:
                raise CatalogError(f"line {lineno}: {exc}") from exc
            items.append(item)
    return Catalog(items=tuple(items), scheme=scheme, generation=0)


def apply_delta(catalog: Catalog, additions, purge_ids) -> DeltaResult:
    """Purge first, then add, so one delta can replace an item in place.

    Unknown purge ids are ignored but counted; purging the same id twice
    behaves like purging it once.
    """
    present = {item.item_id for item in catalog.items}
    purge_set = set(purge_ids)
    ignored = tuple(sorted(purge_set - present))
    survivors = [item for item in catalog.items if item.item_id not in purge_set]

    surviving_ids = {item.item_id for item in survivors}
    for item in additions:
        if item.item_id in surviving_ids:
            raise CatalogError(
                f"addition duplicates surviving item_id {item.item_id!r}"
            )
        if item.category >= catalog.scheme.d:
            raise CatalogError(
                f"addition {item.item_id!r} category {item.category} out of range"
            )
        surviving_ids.add(item.item_id)
        survivors.append(item)

    new_catalog = Catalog(
        items=tuple(survivors),
        scheme=catalog.scheme,
        generation=catalog.generation + 1,
    )
    return DeltaResult(catalog=new_catalog, ignored_purge_ids=ignored)
