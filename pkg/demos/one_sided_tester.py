"""
A one-sided convexity tester that explains its rejections
=========================================================

The tester only ever rejects with evidence: either a set of boundary cubes
whose total Gaussian mass is too large, or a negative point sitting inside the
hull of positive samples.  Here it looks at a ball (convex) and a stripe
pattern (far from convex), and the stripe's certificate is re-checked from
scratch.
"""

import numpy as np

from convexity_testbed.convex import Ball, Stripe
from convexity_testbed.grid import GridParams, build_grid
from convexity_testbed.tester_one_sided import OneSidedConfig, run_a_star, verify_certificate

# A coarse-but-sound grid in the plane.  The default side eps^3/n^4 would
# need billions of cubes, so l and n' are set by hand (the report flags it).
params = GridParams(2, 0.2, ell=0.027, n_prime=1.0)
grid = build_grid(params)
config = OneSidedConfig(params)
print(f"{len(grid)} cubes, {config.budget(grid)} samples per run, threshold {config.threshold}")

# A convex target: the boundary cubes stay well under eps/4.
ball = run_a_star(Ball(0.8, n=2), config, seed=1, grid=grid)
print("ball  :", ball.decision, ball.reason, f"bc mass {ball.details['bc_mass']:.4f}")

# Six alternating bands along x_1.  Every band edge adds boundary cubes.
stripe = Stripe(2, 5)
verdict = run_a_star(stripe, config, seed=1, grid=grid)
print("stripe:", verdict.decision, verdict.reason, f"bc mass {verdict.details['bc_mass']:.4f}")

cert = verdict.certificate
print(f"certificate lists {len(cert['boundary_cubes'])} boundary cubes")
print("first cube index, positive witness, negative witness:")
print(cert["boundary_cubes"][0], np.round(cert["positive_witnesses"][0], 3),
      np.round(cert["negative_witnesses"][0], 3))

# The verifier re-labels the witnesses with the target and re-sums exact
# cube masses.  The same evidence is worthless against a convex set.
print("verifies against the stripe:", verify_certificate(cert, stripe, params))
print("verifies against a ball    :", verify_certificate(cert, Ball(0.9, n=2), params))
