"""
Random polytopes versus independent labels
==========================================

A random polytope cuts space with N halfspaces tangent to a sphere of radius
r.  A point at radius x survives with probability rho(x).  Labelling a few far
points independently with those same probabilities gives a product law that
is hard to tell apart from the polytope's joint law.
"""

import numpy as np

from convexity_testbed.adversarial import (build_shells, distinguishing_experiment, make_rho,
                                           marginal_identity, sample_dno, typicality_check)
from convexity_testbed.gauss import LowerBoundParams

n = 16
lb = LowerBoundParams.build(n, N=16)
print(f"n={n}: N={lb.N}, alpha={lb.alpha:.3f} (clamped: {lb.alpha_clamped}), r={lb.r:.4f}")

# rho at a few radii, and the matching empirical survival frequency
rho_fn = make_rho(lb.r, lb.N, n)
for x in (lb.r, lb.alpha, 2 * lb.alpha):
    m = marginal_identity(n, lb.N, lb.r, x, 10_000, seed=1)
    print(f"radius {x:.3f}: rho {m['rho']:.4f}, survived {m['frequency']:.4f} +- {m['sigma']:.4f}")

# The no-distribution keeps each equal-mass shell with probability rho(t_i).
shells = build_shells(n, 64)
part = sample_dno(n, shells, rho_fn, seed=2)
# Most Gaussian mass sits near radius sqrt(n) = 4, where rho is small, so
# few shells survive at this scale.
print(f"D_no draw keeps {part.included.sum()} of {part.M} shells "
      f"(expected {part.rho_at_boundaries.sum():.2f})")

# Query points at radius 2r: single caps are exact, pairwise overlaps are
# Monte Carlo and flagged when the threshold is below resolution.
rng = np.random.default_rng(3)
Z = rng.standard_normal((4, n))
Z *= 2 * lb.r / np.linalg.norm(Z, axis=1, keepdims=True)
rep = typicality_check(Z, lb.r, 200_000, seed=4)
print("cap areas:", np.round(rep.fsa, 4), "typical:", rep.is_typical, rep.notes)

# Joint label law versus the product law on those points.
d = distinguishing_experiment(n, 4, lb.N, lb.r, 20_000, seed=5, points=Z)
print(f"TV = {d['tv']:.4f}, 95% interval {np.round(d['tv_ci'], 4)}, "
      f"bad matrices {d['bad_matrix_frequency']:.4f}")

# With a single halfspace and two opposite points the labels are strongly
# dependent, and the distance to the product law is 2/9.
d1 = distinguishing_experiment(2, 2, 1, 1.0, 20_000, seed=6, points=[[2.0, 0.0], [-2.0, 0.0]])
print(f"one halfspace, antipodal points: TV = {d1['tv']:.4f} (exact 2/9 = {2 / 9:.4f})")
