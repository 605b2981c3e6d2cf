"""Category weights: smoothed global CTR, Dirichlet user posteriors, and
co-interest diffusion.

Shows the floor the smoothing priors enforce, how a user's weight vector
tracks their clicks without ever zeroing a category, and how the
co-interest matrix leaks interest into related categories.
"""

import numpy as np

from streamrank.weights import (
    CategoryStats,
    DirichletPrior,
    SmoothingPriors,
    UserProfile,
    build_co_interest,
    diffuse,
    diffusion_fixed_point,
    effective_weights,
    global_weights,
    user_posterior_mean,
)

CATS = ["dresses", "shoes", "bags", "watches"]
d = len(CATS)


def pretty(vec):
    return "  ".join(f"{name}={value:.3f}" for name, value in zip(CATS, vec))


stats = CategoryStats.zeros(d)
priors = SmoothingPriors(alpha=1.0, beta=9.0)
print("global weights with no traffic (floor = alpha/(alpha+beta)):")
print("  " + pretty(global_weights(stats, priors)))

for cat, views, clicks in ((0, 4000, 700), (1, 3000, 360), (2, 1500, 120), (3, 40, 9)):
    stats.add_view(cat, views)
    stats.add_click(cat, clicks)
print("after traffic (watches have 40 views; smoothing damps the noise):")
print("  " + pretty(global_weights(stats, priors)))
print()

profile = UserProfile("maya", d)
for _ in range(9):
    profile.record_click(3, 0.0)  # watches, watches, watches...
prior = DirichletPrior.uniform(d)
print(f"maya has {profile.total_clicks} clicks, all watches.")
print("raw posterior mean:")
print("  " + pretty(user_posterior_mean(profile, prior)))

# co-interest built from other users' top categories: watch people
# also click bags, dress people also click shoes
log = {
    "u1": {3: 6, 2: 3}, "u2": {3: 4, 2: 2}, "u3": {3: 5},
    "u4": {0: 7, 1: 3}, "u5": {0: 4, 1: 2}, "u6": {1: 5},
    "u7": {2: 4}, "u8": {0: 3},
}
co = build_co_interest(log, d, top_k=3)
print("diffused through the co-interest matrix (watch lovers also like bags):")
print("  " + pretty(diffuse(co, user_posterior_mean(profile, prior))))
print()

global_w = global_weights(stats, priors)
below = effective_weights(profile, global_w, co, prior, min_clicks=10)
print(f"at {profile.total_clicks} clicks the engine still serves global weights: "
      f"{below is global_w}")
profile.record_click(3, 1.0)
above = effective_weights(profile, global_w, co, prior, min_clicks=10)
print(f"the 10th click flips personalization on: {above is not global_w}")
print("  " + pretty(above))
print()

print("population-level interest (fixed point of repeated diffusion =")
print("leading eigenvector of the co-interest matrix):")
print("  " + pretty(diffusion_fixed_point(co)))
