"""Synthetic users, browsing sessions, and an A/B experiment harness.

The browse model is deliberately simple and explicitly synthetic: a user
views the ranked page top to bottom, continues past each item with a
fixed patience probability (geometric scroll depth), and clicks each
viewed item with probability

    min(1, base_click_rate * d * interest[category]) * (1 - boredom)^(run - 1)

where ``run`` is the length of the current stretch of consecutive
same-category views. The boredom penalty is the harness's stand-in for
the premise that repetitive streams lose clicks; experiments that measure
diversification set it explicitly.

The experiment runner wires the full pipeline per arm (Thompson scoring,
weight learning, submodular or multinomial ranking, delayed-feedback
refresh) over a shared population split disjointly between two arms, and
reports per-session engagement metrics with Welch's t-test.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as scipy_stats

from .catalog import Catalog, Item, make_item, synthetic_scheme
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


class SimulationError(ValueError):
    """Inconsistent simulation configuration."""


# -- population and catalog generation --------------------------------------


@dataclass(frozen=True, eq=False)
class SimUser:
    user_id: str
    true_interest: np.ndarray
    base_click_rate: float
    p_scroll: float
    boredom: float

    def __post_init__(self):
        if not math.isclose(float(np.sum(self.true_interest)), 1.0, abs_tol=1e-9):
            raise SimulationError("true_interest must lie on the simplex")
        if not 0.0 < self.base_click_rate < 1.0:
            raise SimulationError("base_click_rate must be in (0,1)")
        if not 0.0 <= self.p_scroll < 1.0:
            raise SimulationError("p_scroll must be in [0,1)")
        if self.boredom < 0.0:
            raise SimulationError("boredom must be >= 0")


@dataclass(frozen=True)
class PopulationSpec:
    """Population draw: interests come from Dirichlet(concentration * d *
    profile). Low concentration spreads users apart (heterogeneous tastes);
    high concentration pins them near the profile, which defaults to
    uniform."""

    n_users: int
    d: int
    concentration: float = 0.3
    base_click_rate: float = 0.12
    p_scroll: float = 0.95
    boredom: float = 0.3
    interest_profile: tuple = ()

    def __post_init__(self):
        if self.n_users < 1 or self.d < 1 or not self.concentration > 0:
            raise SimulationError("invalid population spec")
        if self.interest_profile and len(self.interest_profile) != self.d:
            raise SimulationError("interest_profile length must equal d")

    def dirichlet_alpha(self) -> np.ndarray:
        if not self.interest_profile:
            return np.full(self.d, self.concentration)
        profile = np.asarray(self.interest_profile, dtype=float)
        if np.any(profile <= 0):
            raise SimulationError("interest_profile entries must be positive")
        return self.concentration * self.d * profile / profile.sum()


@dataclass(frozen=True)
class CatalogSpec:
    n_items: int
    d: int
    n_brands: int = 30
    n_colors: int = 12
    n_sizes: int = 6
    price_low: float = 5.0
    price_high: float = 400.0

    def __post_init__(self):
        if self.n_items < 1 or self.d < 1:
            raise SimulationError("invalid catalog spec")


def gen_population(spec: PopulationSpec, seed) -> list:
    rng = np.random.default_rng(seed)
    interests = rng.dirichlet(spec.dirichlet_alpha(), size=spec.n_users)
    return [
        SimUser(
            user_id=f"u{idx:06d}",
            true_interest=interests[idx],
            base_click_rate=spec.base_click_rate,
            p_scroll=spec.p_scroll,
            boredom=spec.boredom,
        )
        for idx in range(spec.n_users)
    ]


def gen_catalog_records(spec: CatalogSpec, seed) -> list:
    """Raw JSON-lines records (pre-encoding), deterministic per seed."""
    rng = np.random.default_rng(seed)
    records = []
    for idx in range(spec.n_items):
        records.append(
            {
                "item_id": f"it{idx:06d}",
                "attributes": {
                    "brand": f"brand{rng.integers(spec.n_brands)}",
                    "color": f"color{rng.integers(spec.n_colors)}",
                    "department": f"dept{rng.integers(spec.d)}",
                    "size": f"size{rng.integers(spec.n_sizes)}",
                },
                "price": round(float(rng.uniform(spec.price_low, spec.price_high)), 2),
            }
        )
    return records


def gen_catalog(spec: CatalogSpec, seed) -> Catalog:
    scheme = synthetic_scheme(spec.d)
    items = tuple(
        make_item(rec["item_id"], rec["attributes"], rec["price"], scheme)
        for rec in gen_catalog_records(spec, seed)
    )
    return Catalog(items=items, scheme=scheme, generation=0)


# -- sessions ----------------------------------------------------------------

SessionEvent = namedtuple("SessionEvent", ["kind", "item_id", "category"])


def click_probability(user: SimUser, category: int, run_length: int) -> float:
    base = min(1.0, user.base_click_rate * len(user.true_interest)
               * float(user.true_interest[category]))
    return base * (1.0 - user.boredom) ** (run_length - 1)


def run_session(user: SimUser, page, rng) -> list:
    """Walk a ranked page top to bottom; geometric scroll, boredom-discounted
    clicks. Every viewed item emits a view event; clicks add a click event."""
    events = []
    prev_category = None
    run_length = 0
    for item in page:
        cat = item.category
        run_length = run_length + 1 if cat == prev_category else 1
        prev_category = cat
        events.append(SessionEvent("view", item.item_id, cat))
        if rng.random() < click_probability(user, cat, run_length):
            events.append(SessionEvent("click", item.item_id, cat))
        if rng.random() >= user.p_scroll:
            break
    return events


def multinomial_baseline_ranker(items, scores, propensities, k: int, rng) -> list:
    """Slot-by-slot category sampling baseline.

    Each slot draws a category proportionally to its propensity and emits
    that category's best unused item; exhausted (or zero-propensity)
    categories drop out and the rest renormalize. May return fewer than
    ``k`` items when everything reachable is exhausted.
    """
    propensities = np.asarray(propensities, dtype=float)
    if np.any(propensities < 0):
        raise SimulationError("propensities must be nonnegative")
    by_cat = {}
    for idx, item in enumerate(items):
        by_cat.setdefault(item.category, []).append(idx)
    for cat, members in by_cat.items():
        members.sort(key=lambda i: (-scores[i], items[i].item_id))
        members.reverse()  # pop() from the end yields the best first

    page = []
    active = [cat for cat in by_cat if propensities[cat] > 0]
    while len(page) < k and active:
        mass = np.array([propensities[cat] for cat in active])
        total = mass.sum()
        if not total > 0:
            break
        cat = active[rng.choice(len(active), p=mass / total)]
        members = by_cat[cat]
        page.append(items[members.pop()])
        if not members:
            active.remove(cat)
    return page


# -- statistics --------------------------------------------------------------

TTestResult = namedtuple("TTestResult", ["t", "p_value", "dof"])


def welch_t_test(sample_a, sample_b) -> TTestResult:
    """Welch's unequal-variance t-test, two-sided.

    Degenerate variance handling: when both samples have zero variance the
    statistic is 0 (p = 1) for equal means and +/-inf (p = 0) otherwise.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise SimulationError("each sample needs at least two values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = a.mean() - b.mean()
    se_sq = va / len(a) + vb / len(b)
    if se_sq == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, float(len(a) + len(b) - 2))
        return TTestResult(math.copysign(math.inf, diff), 0.0,
                           float(len(a) + len(b) - 2))
    t = diff / math.sqrt(se_sq)
    dof = se_sq**2 / (
        (va / len(a)) ** 2 / (len(a) - 1) + (vb / len(b)) ** 2 / (len(b) - 1)
    )
    p = 2.0 * float(scipy_stats.t.sf(abs(t), dof))
    return TTestResult(float(t), p, float(dof))


def ratio_welch_t_test(clicks_a, views_a, clicks_b, views_b) -> TTestResult:
    """Welch test for a per-session ratio-of-sums metric (aggregate CTR).

    The session-level CTR distribution is depth-dependent (a one-view
    session is all-or-nothing), so the aggregate clicks/views ratio is
    linearized with the delta method: each session contributes the
    influence value (c_i - R * v_i) / mean(v), whose sample variance
    estimates the variance of the aggregate ratio. The t statistic and
    Welch-Satterthwaite degrees of freedom then follow as usual.
    """
    ca = np.asarray(clicks_a, dtype=float)
    va = np.asarray(views_a, dtype=float)
    cb = np.asarray(clicks_b, dtype=float)
    vb = np.asarray(views_b, dtype=float)
    if len(ca) < 2 or len(cb) < 2:
        raise SimulationError("each arm needs at least two sessions")
    if va.sum() <= 0 or vb.sum() <= 0:
        raise SimulationError("each arm needs at least one view")
    ra = ca.sum() / va.sum()
    rb = cb.sum() / vb.sum()
    ia = (ca - ra * va) / va.mean()
    ib = (cb - rb * vb) / vb.mean()
    var_a = ia.var(ddof=1) / len(ia)
    var_b = ib.var(ddof=1) / len(ib)
    se_sq = var_a + var_b
    diff = ra - rb
    if se_sq == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, float(len(ca) + len(cb) - 2))
        return TTestResult(math.copysign(math.inf, diff), 0.0,
                           float(len(ca) + len(cb) - 2))
    t = diff / math.sqrt(se_sq)
    dof = se_sq**2 / (var_a**2 / (len(ia) - 1) + var_b**2 / (len(ib) - 1))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), dof))
    return TTestResult(float(t), p, float(dof))


# -- experiments -------------------------------------------------------------


@dataclass(frozen=True)
class ArmConfig:
    name: str
    ranker: str = "submodular"            # submodular | multinomial
    weights_mode: str = "adaptive"        # adaptive | static | personalized
    static_weights: tuple = ()

    def __post_init__(self):
        if self.ranker not in ("submodular", "multinomial"):
            raise SimulationError(f"unknown ranker {self.ranker!r}")
        if self.weights_mode not in ("adaptive", "static", "personalized"):
            raise SimulationError(f"unknown weights_mode {self.weights_mode!r}")
        if self.weights_mode == "static" and not self.static_weights:
            raise SimulationError("static weights_mode needs static_weights")


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationSpec
    catalog: CatalogSpec
    control: ArmConfig
    treatment: ArmConfig
    rounds: int = 1
    measure_from_round: int = 0
    page_size: int = 60
    refresh_interval: int = 500
    score_scale: float = 1.0
    smoothing: SmoothingPriors = SmoothingPriors()
    dirichlet_strength: float = 1.0
    co_interest_top_k: int = 5
    min_personalization_clicks: int = 10
    profile_window: int = 200
    dwell_log_mean: float = 1.0
    dwell_log_sigma: float = 0.5

    def __post_init__(self):
        if self.population.d != self.catalog.d:
            raise SimulationError(
                f"population d={self.population.d} does not match "
                f"catalog d={self.catalog.d}"
            )
        if not 0 <= self.measure_from_round < self.rounds:
            raise SimulationError("measure_from_round outside rounds")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        return cls(
            population=PopulationSpec(**raw["population"]),
            catalog=CatalogSpec(**raw["catalog"]),
            control=ArmConfig(**{**raw["control"],
                                 "static_weights": tuple(raw["control"].get("static_weights", ()))}),
            treatment=ArmConfig(**{**raw["treatment"],
                                   "static_weights": tuple(raw["treatment"].get("static_weights", ()))}),
            **{
                key: raw[key]
                for key in (
                    "rounds", "measure_from_round", "page_size", "refresh_interval",
                    "score_scale", "dirichlet_strength", "co_interest_top_k",
                    "min_personalization_clicks", "profile_window",
                    "dwell_log_mean", "dwell_log_sigma",
                )
                if key in raw
            },
        )


@dataclass
class ArmMetrics:
    name: str
    sessions: int
    views: int
    clicks: int
    ctr: float
    duration: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sessions": self.sessions,
            "views": self.views,
            "clicks": self.clicks,
            "ctr": self.ctr,
            "duration": self.duration,
        }


@dataclass
class ExperimentReport:
    control: ArmMetrics
    treatment: ArmMetrics
    deltas_pct: dict
    tests: dict
    seed: int

    def to_dict(self) -> dict:
        return {
            "control": self.control.to_dict(),
            "treatment": self.treatment.to_dict(),
            "deltas_pct": self.deltas_pct,
            "tests": {
                metric: {"t": res.t, "p_value": res.p_value, "dof": res.dof}
                for metric, res in self.tests.items()
            },
            "seed": self.seed,
        }


class _ArmRun:
    """One arm's full serving-and-learning loop over its user share."""

    def __init__(self, arm: ArmConfig, cfg: ExperimentConfig, catalog: Catalog, seed):
        self.arm = arm
        self.cfg = cfg
        self.catalog = catalog
        self.rng = np.random.default_rng(seed)
        d = catalog.scheme.d
        self.d = d
        self.model = ClickModel()
        self.scorer = CatalogScorer(self.model, catalog.items)
        self.item_ids = [item.item_id for item in catalog.items]
        self.item_cats = [item.category for item in catalog.items]
        self.obs_keys = [item_keys(item) for item in catalog.items]
        self.index_of = {item.item_id: i for i, item in enumerate(catalog.items)}
        self.stats = CategoryStats.zeros(d)
        self.pending_stats = CategoryStats.zeros(d)
        self.pending_obs = []
        self.profiles = {}
        self.decay_policy = DecayPolicy(max_events=cfg.profile_window)
        self.prior = DirichletPrior.uniform(d, cfg.dirichlet_strength)
        self.global_w = global_weights(self.stats, cfg.smoothing)
        self.co_interest = np.eye(d)
        self.sessions_since_refresh = 0
        if arm.weights_mode == "static" and len(arm.static_weights) != d:
            raise SimulationError("static_weights length must equal d")

    def _weights_for(self, user: SimUser) -> np.ndarray:
        mode = self.arm.weights_mode
        if mode == "static":
            return np.asarray(self.arm.static_weights, dtype=float)
        if mode == "personalized":
            return effective_weights(
                self.profiles.get(user.user_id), self.global_w, self.co_interest,
                self.prior, self.cfg.min_personalization_clicks,
            )
        return self.global_w

    def _rank_page(self, scores: np.ndarray, w: np.ndarray) -> list:
        k = min(self.cfg.page_size, len(self.item_ids))
        if self.arm.ranker == "multinomial":
            propensities = w / w.sum()
            return multinomial_baseline_ranker(
                self.catalog.items, scores, propensities, k, self.rng
            )
        chosen = celf_select_arrays(
            self.item_ids, self.item_cats, scores, w, k, self.cfg.score_scale
        )
        return [self.catalog.items[i] for i in chosen]

    def refresh(self):
        self.model.update_many(self.pending_obs)
        self.pending_obs.clear()
        self.scorer = CatalogScorer(self.model, self.catalog.items)
        self.stats.merge(self.pending_stats)
        self.pending_stats = CategoryStats.zeros(self.d)
        self.global_w = global_weights(self.stats, self.cfg.smoothing)
        if self.arm.weights_mode == "personalized" and self.profiles:
            user_clicks = {}
            for uid, prof in self.profiles.items():
                nz = np.nonzero(prof.click_counts)[0]
                if len(nz):
                    user_clicks[uid] = {int(c): float(prof.click_counts[c]) for c in nz}
            if user_clicks:
                self.co_interest = build_co_interest(
                    user_clicks, self.d, self.cfg.co_interest_top_k
                )
        self.sessions_since_refresh = 0

    def run_session_for(self, user: SimUser, clock: float):
        scores = self.scorer.thompson(self.rng)
        page = self._rank_page(scores, self._weights_for(user))
        events = run_session(user, page, self.rng)

        viewed = {}
        for ev in events:
            if ev.kind == "view":
                self.pending_stats.add_view(ev.category)
                viewed[ev.item_id] = False
            else:
                self.pending_stats.add_click(ev.category)
                viewed[ev.item_id] = True
                profile = self.profiles.get(user.user_id)
                if profile is None:
                    profile = UserProfile(user.user_id, self.d)
                    self.profiles[user.user_id] = profile
                profile.record_click(ev.category, clock)
                profile.decay(self.decay_policy)
        for item_id, clicked in viewed.items():
            self.pending_obs.append(
                Observation(self.obs_keys[self.index_of[item_id]], clicked)
            )

        self.sessions_since_refresh += 1
        if self.sessions_since_refresh >= self.cfg.refresh_interval:
            self.refresh()

        views = len(viewed)
        clicks = sum(1 for ev in events if ev.kind == "click")
        dwell = float(
            np.exp(self.rng.normal(self.cfg.dwell_log_mean, self.cfg.dwell_log_sigma,
                                   size=views)).sum()
        )
        return views, clicks, dwell


def _summarize(name, per_session) -> ArmMetrics:
    views = np.array([row[0] for row in per_session])
    clicks = np.array([row[1] for row in per_session])
    dwell = np.array([row[2] for row in per_session])
    return ArmMetrics(
        name=name,
        sessions=len(per_session),
        views=int(views.sum()),
        clicks=int(clicks.sum()),
        ctr=float(clicks.sum() / max(views.sum(), 1)),
        duration=float(dwell.sum()),
    )


def run_experiment(config: ExperimentConfig, seed: int) -> ExperimentReport:
    """Serve both arms over a shared population split disjointly, then
    compare per-session engagement metrics with Welch's t-test."""
    root = np.random.SeedSequence(seed)
    cat_seed, pop_seed, control_seed, treatment_seed = root.spawn(4)
    catalog = gen_catalog(config.catalog, cat_seed)
    both = gen_population(
        replace(config.population, n_users=2 * config.population.n_users), pop_seed
    )
    assignments = {
        config.control.name: (both[0::2], control_seed),
        config.treatment.name: (both[1::2], treatment_seed),
    }
    arms = {config.control.name: config.control,
            config.treatment.name: config.treatment}

    measured = {}
    for name, (users, arm_seed) in assignments.items():
        arm_run = _ArmRun(arms[name], config, catalog, arm_seed)
        rows = []
        clock = 0.0
        for rnd in range(config.rounds):
            for user in users:
                row = arm_run.run_session_for(user, clock)
                clock += 1.0
                if rnd >= config.measure_from_round:
                    rows.append(row)
        measured[name] = rows

    control_rows = measured[config.control.name]
    treatment_rows = measured[config.treatment.name]
    control = _summarize(config.control.name, control_rows)
    treatment = _summarize(config.treatment.name, treatment_rows)

    def pct(new, old):
        return float("nan") if old == 0 else 100.0 * (new - old) / old

    deltas = {
        "ctr": pct(treatment.ctr, control.ctr),
        "views": pct(treatment.views / treatment.sessions,
                     control.views / control.sessions),
        "duration": pct(treatment.duration / treatment.sessions,
                        control.duration / control.sessions),
    }
    per_metric = {
        "views": ([v for v, _, _ in control_rows], [v for v, _, _ in treatment_rows]),
        "clicks": ([c for _, c, _ in control_rows], [c for _, c, _ in treatment_rows]),
        "duration": ([dw for _, _, dw in control_rows],
                     [dw for _, _, dw in treatment_rows]),
    }
    tests = {
        metric: welch_t_test(b_sample, a_sample)
        for metric, (a_sample, b_sample) in per_metric.items()
    }
    tests["ctr"] = ratio_welch_t_test(
        per_metric["clicks"][1], per_metric["views"][1],
        per_metric["clicks"][0], per_metric["views"][0],
    )
    return ExperimentReport(
        control=control, treatment=treatment, deltas_pct=deltas, tests=tests, seed=seed
    )


# -- canned experiment designs ------------------------------------------------


def preset_experiment(name: str, n_users: int = 10_000) -> ExperimentConfig:
    """The three A/B designs plus an A/A control, sized for desk-scale runs.

    submodular_vs_multinomial: same adaptive weights, rankers differ; the
        boredom penalty is what the submodular interleaving protects.
    adaptive_vs_static: both submodular; control pins uniform weights that
        ignore the population's skewed category propensities.
    personalized_vs_global: heterogeneous tastes; treatment switches users
        past the click threshold onto diffused Dirichlet posteriors, with
        two warm-up rounds so histories can accumulate.
    aa: identical arms, for significance calibration.
    """
    if name == "submodular_vs_multinomial":
        return ExperimentConfig(
            population=PopulationSpec(n_users=n_users, d=6, concentration=5.0,
                                      base_click_rate=0.15, p_scroll=0.98,
                                      boredom=0.3),
            catalog=CatalogSpec(n_items=400, d=6),
            control=ArmConfig(name="multinomial", ranker="multinomial",
                              weights_mode="adaptive"),
            treatment=ArmConfig(name="submodular", ranker="submodular",
                                weights_mode="adaptive"),
            rounds=1, page_size=60, refresh_interval=500, score_scale=0.25,
        )
    if name == "adaptive_vs_static":
        d = 6
        profile = tuple(1.0 / (j + 1) for j in range(d))
        return ExperimentConfig(
            population=PopulationSpec(n_users=n_users, d=d, concentration=8.0,
                                      base_click_rate=0.15, p_scroll=0.98,
                                      boredom=0.3, interest_profile=profile),
            catalog=CatalogSpec(n_items=400, d=d),
            control=ArmConfig(name="static", ranker="submodular",
                              weights_mode="static",
                              static_weights=tuple([0.15] * d)),
            treatment=ArmConfig(name="adaptive", ranker="submodular",
                                weights_mode="adaptive"),
            rounds=1, page_size=60, refresh_interval=500, score_scale=0.25,
        )
    if name == "personalized_vs_global":
        return ExperimentConfig(
            population=PopulationSpec(n_users=n_users, d=12, concentration=0.25,
                                      base_click_rate=0.15, p_scroll=0.98,
                                      boredom=0.3),
            catalog=CatalogSpec(n_items=400, d=12),
            control=ArmConfig(name="global", ranker="submodular",
                              weights_mode="adaptive"),
            treatment=ArmConfig(name="personalized", ranker="submodular",
                                weights_mode="personalized"),
            rounds=3, measure_from_round=2, page_size=60, refresh_interval=500,
            score_scale=0.25, co_interest_top_k=3,
        )
    if name == "aa":
        return ExperimentConfig(
            population=PopulationSpec(n_users=n_users, d=6, concentration=5.0,
                                      base_click_rate=0.15, p_scroll=0.95,
                                      boredom=0.3),
            catalog=CatalogSpec(n_items=400, d=6),
            control=ArmConfig(name="a1", ranker="submodular", weights_mode="adaptive"),
            treatment=ArmConfig(name="a2", ranker="submodular", weights_mode="adaptive"),
            rounds=1, page_size=60, refresh_interval=500, score_scale=0.25,
        )
    raise SimulationError(f"unknown experiment preset {name!r}")


# -- focused bandit check ----------------------------------------------------


def run_two_item_bandit(true_ctrs=(0.10, 0.05), sessions: int = 10_000,
                        refresh_interval: int = 20, seed: int = 0) -> np.ndarray:
    """Two-item world: each session shows the Thompson-preferred item once
    and learns from the click outcome in delayed batches. Returns the
    chosen item index per session."""
    rng = np.random.default_rng(seed)
    items = [
        Item(item_id=f"arm{i}", attributes={"item_id": f"arm{i}"}, category=0)
        for i in range(len(true_ctrs))
    ]
    keys = [item_keys(item) for item in items]
    model = ClickModel()
    pending = []
    choices = np.empty(sessions, dtype=np.intp)
    for s in range(sessions):
        scores = model.thompson_scores(items, rng)
        pick = int(np.argmax(scores))
        choices[s] = pick
        clicked = bool(rng.random() < true_ctrs[pick])
        pending.append(Observation(keys[pick], clicked))
        if len(pending) >= refresh_interval:
            model.update_many(pending)
            pending.clear()
    return choices
