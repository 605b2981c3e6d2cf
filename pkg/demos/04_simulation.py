"""Offline A/B re-runs of the three production comparisons, desk-sized.

Each preset wires the full pipeline (Thompson scoring, weight learning,
ranking, delayed-feedback refresh) for two arms over a shared synthetic
population. Magnitudes are synthetic; the directions are the point.

Full-size runs live in the acceptance suite; this demo uses 1,500 users
per arm so it finishes in well under a minute.
"""

import numpy as np

from streamrank.simulator import preset_experiment, run_experiment, run_two_item_bandit

for preset in ("submodular_vs_multinomial", "adaptive_vs_static",
               "personalized_vs_global"):
    report = run_experiment(preset_experiment(preset, n_users=1500), seed=0)
    test = report.tests["ctr"]
    print(f"{preset}:")
    print(f"  {report.control.name:<12} ctr={report.control.ctr:.4f} "
          f"({report.control.sessions} sessions)")
    print(f"  {report.treatment.name:<12} ctr={report.treatment.ctr:.4f}")
    print(f"  ctr delta {report.deltas_pct['ctr']:+.2f}%  "
          f"welch t={test.t:.2f} p={test.p_value:.2e}")
    print()

print("two-item bandit (true CTRs 0.10 vs 0.05, delayed feedback):")
choices = run_two_item_bandit(true_ctrs=(0.10, 0.05), sessions=10_000, seed=0)
for quarter in range(4):
    window = choices[quarter * 2500:(quarter + 1) * 2500]
    share = float(np.mean(window == 0))
    print(f"  sessions {quarter * 2500:>5}-{(quarter + 1) * 2500:>5}: "
          f"better item served {share:.0%}")
