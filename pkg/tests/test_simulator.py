import numpy as np
import pytest
from scipy import stats as scipy_stats

from streamrank.diversifier import ScoredItem
from streamrank.simulator import (
    ArmConfig,
    CatalogSpec,
    ExperimentConfig,
    PopulationSpec,
    SimulationError,
    SimUser,
    click_probability,
    gen_catalog,
    gen_catalog_records,
    gen_population,
    multinomial_baseline_ranker,
    preset_experiment,
    ratio_welch_t_test,
    run_experiment,
    run_session,
    run_two_item_bandit,
    welch_t_test,
)


def user(interest, base=0.1, p_scroll=0.9, boredom=0.0):
    interest = np.asarray(interest, dtype=float)
    return SimUser("u", interest / interest.sum(), base, p_scroll, boredom)


class TestGeneration:
    def test_population_deterministic_per_seed(self):
        spec = PopulationSpec(n_users=20, d=5)
        a = gen_population(spec, 3)
        b = gen_population(spec, 3)
        c = gen_population(spec, 4)
        assert all(np.array_equal(x.true_interest, y.true_interest)
                   for x, y in zip(a, b))
        assert any(not np.array_equal(x.true_interest, y.true_interest)
                   for x, y in zip(a, c))

    def test_three_seeds_three_distinct_populations(self):
        spec = PopulationSpec(n_users=10, d=4)
        pops = [gen_population(spec, s) for s in (0, 1, 2)]
        firsts = [tuple(p[0].true_interest) for p in pops]
        assert len(set(firsts)) == 3

    def test_high_concentration_approaches_uniform(self):
        spec = PopulationSpec(n_users=200, d=4, concentration=10_000.0)
        pop = gen_population(spec, 0)
        spread = max(float(np.abs(u.true_interest - 0.25).max()) for u in pop)
        assert spread < 0.05

    def test_interest_profile_shifts_population_mean(self):
        spec = PopulationSpec(n_users=500, d=4, concentration=20.0,
                              interest_profile=(4.0, 2.0, 1.0, 1.0))
        pop = gen_population(spec, 0)
        mean = np.mean([u.true_interest for u in pop], axis=0)
        assert mean[0] > mean[1] > mean[2]
        assert mean[0] == pytest.approx(0.5, abs=0.03)

    def test_catalog_deterministic_and_valid(self):
        spec = CatalogSpec(n_items=50, d=8)
        a = gen_catalog_records(spec, 9)
        b = gen_catalog_records(spec, 9)
        assert a == b
        catalog = gen_catalog(spec, 9)
        assert len(catalog) == 50
        assert all(0 <= item.category < 8 for item in catalog.items)

    def test_population_spec_mismatch_rejected(self):
        with pytest.raises(SimulationError):
            ExperimentConfig(
                population=PopulationSpec(n_users=10, d=5),
                catalog=CatalogSpec(n_items=10, d=6),
                control=ArmConfig(name="a"),
                treatment=ArmConfig(name="b"),
            )


class TestRunSession:
    def page(self, cats):
        return [ScoredItem(f"i{n}", c, 0.5) for n, c in enumerate(cats)]

    def test_zero_patience_views_exactly_one(self):
        u = user([1, 1], p_scroll=0.0)
        events = run_session(u, self.page([0, 1, 0, 1]), np.random.default_rng(0))
        assert sum(1 for e in events if e.kind == "view") == 1

    def test_neutral_user_click_rate_matches_base(self):
        u = user([1, 1, 1, 1], base=0.25, p_scroll=0.99, boredom=0.0)
        assert click_probability(u, 2, 1) == pytest.approx(0.25)
        rng = np.random.default_rng(1)
        views = clicks = 0
        page = self.page(list(range(4)) * 15)
        for _ in range(400):
            for e in run_session(u, page, rng):
                views += e.kind == "view"
                clicks += e.kind == "click"
        assert clicks / views == pytest.approx(0.25, abs=0.01)

    def test_full_boredom_kills_immediate_repeats(self):
        u = user([1, 1], base=0.9, p_scroll=0.99, boredom=1.0)
        rng = np.random.default_rng(2)
        page = self.page([0, 0, 0, 1, 1])
        for _ in range(50):
            events = run_session(u, page, rng)
            clicked = {e.item_id for e in events if e.kind == "click"}
            # items i1, i2, i4 are immediate same-category repeats
            assert not clicked & {"i1", "i2", "i4"}

    def test_boredom_discount_factor(self):
        # base 0.4 * d=2 * interest 0.5 = 0.4 before the repeat discount
        u = user([1, 1], base=0.4, boredom=0.3)
        assert click_probability(u, 0, 1) == pytest.approx(0.4, abs=1e-12)
        assert click_probability(u, 0, 2) == pytest.approx(0.4 * 0.7, abs=1e-12)
        assert click_probability(u, 0, 3) == pytest.approx(0.4 * 0.49, abs=1e-12)

    def test_views_always_at_least_clicks(self):
        rng = np.random.default_rng(3)
        u = user([3, 1, 1], base=0.5, p_scroll=0.95, boredom=0.2)
        page = self.page([0, 1, 2, 0, 1, 2, 0])
        for _ in range(100):
            events = run_session(u, page, rng)
            views = sum(1 for e in events if e.kind == "view")
            clicks = sum(1 for e in events if e.kind == "click")
            assert clicks <= views


class TestMultinomialRanker:
    def items(self, cats):
        return [ScoredItem(f"i{n}", c, 0.0) for n, c in enumerate(cats)]

    def test_single_category_yields_score_order(self):
        items = self.items([0, 0, 0])
        scores = np.array([0.2, 0.9, 0.5])
        page = multinomial_baseline_ranker(items, scores, [1.0], 3,
                                           np.random.default_rng(0))
        assert [it.item_id for it in page] == ["i1", "i2", "i0"]

    def test_zero_propensity_category_unreachable(self):
        items = self.items([0, 0, 1, 1])
        scores = np.array([0.5, 0.4, 0.9, 0.8])
        page = multinomial_baseline_ranker(items, scores, [1.0, 0.0], 4,
                                           np.random.default_rng(0))
        assert [it.item_id for it in page] == ["i0", "i1"]  # shorter page

    def test_fixed_seed_reproducible(self):
        items = self.items([0, 1, 2, 0, 1, 2, 0, 1])
        scores = np.random.default_rng(5).random(8)
        a = multinomial_baseline_ranker(items, scores, [0.5, 0.3, 0.2], 6,
                                        np.random.default_rng(11))
        b = multinomial_baseline_ranker(items, scores, [0.5, 0.3, 0.2], 6,
                                        np.random.default_rng(11))
        assert [it.item_id for it in a] == [it.item_id for it in b]

    def test_exhausted_category_renormalizes(self):
        items = self.items([0, 1, 1, 1])
        scores = np.array([0.9, 0.8, 0.7, 0.6])
        page = multinomial_baseline_ranker(items, scores, [0.99, 0.01], 4,
                                           np.random.default_rng(1))
        assert len(page) == 4
        assert {it.item_id for it in page} == {"i0", "i1", "i2", "i3"}


class TestWelch:
    def test_identical_samples(self):
        res = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.t == 0.0
        assert res.p_value == 1.0

    def test_degenerate_variance_guard(self):
        res = welch_t_test([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0])
        assert res.p_value == 0.0
        assert res.t == -np.inf

    def test_matches_scipy_oracle(self):
        rng = np.random.default_rng(4)
        a = rng.normal(0.0, 1.0, 1000)
        b = rng.normal(0.5, 1.0, 1000)
        res = welch_t_test(a, b)
        t_ref, p_ref = scipy_stats.ttest_ind(a, b, equal_var=False)
        assert res.t == pytest.approx(float(t_ref), abs=1e-10)
        assert res.p_value == pytest.approx(float(p_ref), abs=1e-10)
        assert res.p_value < 0.001

    def test_oracle_agreement_on_unequal_sizes_and_variances(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            a = rng.normal(0.0, rng.uniform(0.5, 3.0), rng.integers(5, 80))
            b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 3.0),
                           rng.integers(5, 80))
            res = welch_t_test(a, b)
            t_ref, p_ref = scipy_stats.ttest_ind(a, b, equal_var=False)
            assert res.t == pytest.approx(float(t_ref), rel=1e-10)
            assert res.p_value == pytest.approx(float(p_ref), rel=1e-9)

    def test_sample_size_guard(self):
        with pytest.raises(SimulationError):
            welch_t_test([1.0], [1.0, 2.0])

    def test_ratio_test_calibrated_under_null(self):
        rng = np.random.default_rng(6)
        rejections = 0
        trials = 300
        for _ in range(trials):
            va = rng.integers(1, 40, size=120)
            vb = rng.integers(1, 40, size=120)
            ca = rng.binomial(va, 0.1)
            cb = rng.binomial(vb, 0.1)
            res = ratio_welch_t_test(ca, va, cb, vb)
            rejections += res.p_value < 0.05
        assert rejections / trials < 0.1

    def test_ratio_test_detects_true_difference(self):
        rng = np.random.default_rng(7)
        va = rng.integers(5, 40, size=800)
        vb = rng.integers(5, 40, size=800)
        ca = rng.binomial(va, 0.12)
        cb = rng.binomial(vb, 0.09)
        res = ratio_welch_t_test(ca, va, cb, vb)
        assert res.t > 0
        assert res.p_value < 0.001


class TestExperimentHarness:
    def small_config(self, **overrides):
        base = dict(
            population=PopulationSpec(n_users=150, d=4, concentration=2.0,
                                      base_click_rate=0.2, p_scroll=0.9,
                                      boredom=0.3),
            catalog=CatalogSpec(n_items=80, d=4),
            control=ArmConfig(name="control"),
            treatment=ArmConfig(name="treatment"),
            rounds=1,
            page_size=20,
            refresh_interval=50,
        )
        base.update(overrides)
        return ExperimentConfig(**base)

    def test_deterministic_given_seed(self):
        cfg = self.small_config()
        a = run_experiment(cfg, seed=5).to_dict()
        b = run_experiment(cfg, seed=5).to_dict()
        assert a == b

    def test_report_accounting(self):
        cfg = self.small_config()
        report = run_experiment(cfg, seed=2)
        for arm in (report.control, report.treatment):
            assert arm.sessions == 150
            assert 0 <= arm.clicks <= arm.views
            assert arm.ctr == pytest.approx(arm.clicks / arm.views)
        assert set(report.tests) == {"ctr", "views", "clicks", "duration"}

    def test_personalized_arm_runs_and_builds_profiles(self):
        cfg = self.small_config(
            treatment=ArmConfig(name="treatment", weights_mode="personalized"),
            rounds=2,
            measure_from_round=1,
        )
        report = run_experiment(cfg, seed=3)
        assert report.treatment.sessions == 150

    def test_preset_names(self):
        for name in ("submodular_vs_multinomial", "adaptive_vs_static",
                     "personalized_vs_global", "aa"):
            cfg = preset_experiment(name, n_users=50)
            assert cfg.population.n_users == 50
        with pytest.raises(SimulationError):
            preset_experiment("nosuch")

    def test_config_roundtrip_from_dict(self):
        raw = {
            "population": {"n_users": 40, "d": 3, "concentration": 1.0},
            "catalog": {"n_items": 30, "d": 3},
            "control": {"name": "c", "ranker": "multinomial"},
            "treatment": {"name": "t"},
            "rounds": 2,
            "measure_from_round": 1,
            "page_size": 10,
        }
        cfg = ExperimentConfig.from_dict(raw)
        assert cfg.control.ranker == "multinomial"
        assert cfg.rounds == 2
        report = run_experiment(cfg, seed=1)
        assert report.control.sessions == 40


class TestBandit:
    def test_two_item_bandit_prefers_better_arm(self):
        choices = run_two_item_bandit(true_ctrs=(0.10, 0.05), sessions=4000,
                                      refresh_interval=20, seed=0)
        final = choices[3000:]
        share = float(np.mean(final == 0))
        assert share > 0.8

    def test_deterministic(self):
        a = run_two_item_bandit(sessions=500, seed=3)
        b = run_two_item_bandit(sessions=500, seed=3)
        assert np.array_equal(a, b)
