"""
Classifying grid cubes from labelled samples
============================================

Cubes of side l tile a ball of radius 2n'.  A positive cube next to a cube
holding a negative sample is on the boundary; a positive cube away from any
negative is internal.  Internal cubes always fall inside the hull of the
positive samples once every cube holds a sample.
"""

import os
import tempfile

import numpy as np

from convexity_testbed.convex import Ball
from convexity_testbed.grid import (GridParams, build_grid, classify_cubes, default_sample_budget,
                                    internal_cube_containment_check, truncate_labels)

params = GridParams(2, 0.2, ell=0.1, n_prime=1.0)
grid = build_grid(params)
s = default_sample_budget(grid)
print(f"{len(grid)} cubes, smallest mass {grid.min_mass():.2e}, budget {s} samples")

X = np.random.default_rng(0).standard_normal((s, 2))
labels = truncate_labels(X, Ball(0.7, n=2)(X), params.n_prime)
cls = classify_cubes(X, labels, params, grid)
print(f"every cube occupied: {cls.all_occupied}")
print(f"mass by class: external {cls.ec_mass:.3f}, boundary {cls.bc_mass:.3f}, internal {cls.ic_mass:.3f}")
print("internal cubes inside the positive hull:", internal_cube_containment_check(X, labels, params, grid))

path = os.path.join(tempfile.mkdtemp(), "cubes.csv")
cls.to_csv(path)
with open(path) as fh:
    print("".join(fh.readlines()[:4]), end="")
