"""Personalized visual-discovery ranking.

Pipeline: a Bayesian probit click model scores catalog items with
Thompson sampling, a submodular diversifier re-ranks the top of the
stream by category, and category weights adapt globally (smoothed CTR)
and per user (Dirichlet-Multinomial with co-interest diffusion).
"""

from .catalog import (
    Catalog,
    CatalogError,
    CategoryRule,
    CategoryScheme,
    Item,
    apply_delta,
    categorize,
    load_catalog,
    make_item,
    synthetic_scheme,
)
from .click_model import CatalogScorer, ClickModel, GaussianWeight, Observation
from .diversifier import (
    ScoredItem,
    SelectionState,
    brute_force_select,
    celf_select,
    greedy_select,
    marginal_gain,
    objective,
)
from .weights import (
    CategoryStats,
    DecayPolicy,
    DirichletPrior,
    SmoothingPriors,
    UserProfile,
    build_co_interest,
    diffuse,
    effective_weights,
    global_weights,
    user_posterior_mean,
)

__version__ = "0.1.0"
