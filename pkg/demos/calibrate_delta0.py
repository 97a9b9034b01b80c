"""
Per-run rejection rate of the one-sided tester on a stripe
==========================================================

Measures how often a single run rejects the 5-threshold stripe at the
desk-scale grid, then converts that rate into the number of independent
runs needed for overall rejection probability 2/3.  The printed values are
the ones pinned in the acceptance suite.

Run with ``python demos/calibrate_delta0.py [trials]``.
"""

import sys

import numpy as np
from scipy.stats import beta

from convexity_testbed.convex import Stripe
from convexity_testbed.gauss import spawn_seeds
from convexity_testbed.grid import GridParams, build_grid
from convexity_testbed.tester_one_sided import OneSidedConfig, run_a_star, runs_for_power

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200

# l and n' are overridden: the default l = eps^3 / n^4 needs ~5e10 cubes
params = GridParams(2, 0.2, ell=0.027, n_prime=1.0)
grid = build_grid(params)
config = OneSidedConfig(params)
print(f"{len(grid)} cubes, s = {config.budget(grid)} samples per run")

target = Stripe(2, 5)
reasons = []
for child in spawn_seeds(20261018, trials):
    reasons.append(run_a_star(target, config, child, grid).reason)

rejects = sum(r in ("bc_mass_excess", "hull_violation") for r in reasons)
delta0 = rejects / trials
# one-sided 95% Clopper-Pearson lower limit, so the run count is conservative
lower = beta.ppf(0.05, rejects, trials - rejects + 1) if rejects else 0.0
print("reasons:", {r: reasons.count(r) for r in sorted(set(reasons))})
print(f"delta0 = {delta0:.4f}  (95% lower limit {lower:.4f})")
if lower > 0:
    print(f"runs for power 2/3: {runs_for_power(lower)}")

# the same measurement with the mass test switched off isolates step 5
step5 = OneSidedConfig(params, reject_threshold=1.0)
hits = np.mean([run_a_star(target, step5, c, grid).rejected for c in spawn_seeds(7, 60)])
print(f"step 5 alone rejects in {hits:.2f} of runs")
