"""One-sided sample-based convexity tester on the cube grid, with checkable rejections.

A single run draws ``s`` labelled samples (labels outside Ball(n') forced to 0),
accepts early if some cube is empty, rejects if the boundary cubes carry mass
at least ``eps/4``, and otherwise tests one fresh point against the hull of
the positive samples.  Every rejection carries a certificate that
:func:`verify_certificate` re-checks from scratch against the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex import Hull, TargetSet
from .gauss import make_rng, spawn_seeds
from .grid import (BOUNDARY, CubeGrid, GridParams, build_grid, classify_cubes,
                   cube_bounds, cube_gaussian_mass, default_sample_budget, truncate_labels)
from .lp import in_hull

__all__ = ["OneSidedConfig", "Verdict", "truncate_labels", "run_a_star", "run_a_prime",
           "verify_certificate", "runs_for_power"]


@dataclass(frozen=True)
class OneSidedConfig:
    grid: GridParams
    s: int | None = None
    runs: int = 1
    reject_threshold: float | None = None

    def __post_init__(self):
        if self.s is not None and self.s < 1:
            raise ValueError("sample budget s must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @property
    def threshold(self) -> float:
        return self.grid.epsilon / 4.0 if self.reject_threshold is None else self.reject_threshold

    def budget(self, grid: CubeGrid) -> int:
        return default_sample_budget(grid) if self.s is None else self.s

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "s": self.s, "runs": self.runs,
                "reject_threshold": self.threshold,
                "threshold_overridden": self.reject_threshold is not None}


@dataclass
class Verdict:
    decision: str                      # "accept" or "reject"
    reason: str
    certificate: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.decision == "reject"

    def to_dict(self) -> dict:
        return {"decision": self.decision, "reason": self.reason,
                "certificate": _jsonable(self.certificate), "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _labels(target: TargetSet, X: np.ndarray, n_prime: float) -> np.ndarray:
    return truncate_labels(X, target(X), n_prime)


def _bc_certificate(X, labels, cls, grid: CubeGrid, threshold: float) -> dict:
    """One positive witness per boundary cube plus a negative one in an adjacent cube."""
    loc = grid.locate(X)
    on = loc[:, 0] >= 0
    flat = np.full(len(X), -1, dtype=np.int64)
    flat[on] = np.ravel_multi_index(tuple(loc[on].T), grid.shape)
    size = int(np.prod(grid.shape))
    first_pos = np.full(size, -1, dtype=np.int64)
    first_neg = np.full(size, -1, dtype=np.int64)
    # reversed assignment leaves the earliest sample index in each cube
    for first, sel in ((first_pos, labels & on), (first_neg, ~labels & on)):
        idx = np.flatnonzero(sel)[::-1]
        first[flat[idx]] = idx
    first_pos = first_pos.reshape(grid.shape)
    first_neg = first_neg.reshape(grid.shape)
    cubes, pos_w, neg_w = [], [], []
    n = grid.params.n
    offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * n), indexing="ij")).reshape(n, -1).T
    for box in np.argwhere(cls.classes == BOUNDARY):
        for off in offsets:
            nb = box + off
            if np.any(nb < 0) or np.any(nb >= grid.shape[0]):
                continue
            j = first_neg[tuple(nb)]
            if j >= 0:
                break
        cubes.append(box - grid.R)
        pos_w.append(X[first_pos[tuple(box)]])
        neg_w.append(X[j])
    return {"kind": "bc_mass_excess", "bc_mass": cls.bc_mass, "bound": threshold,
            "boundary_cubes": np.array(cubes, dtype=np.int64).reshape(-1, n),
            "positive_witnesses": np.array(pos_w).reshape(-1, n),
            "negative_witnesses": np.array(neg_w).reshape(-1, n)}


def run_a_star(target: TargetSet, config: OneSidedConfig, seed, grid: CubeGrid | None = None) -> Verdict:
    """One run of the five-step tester."""
    params = config.grid
    grid = grid or build_grid(params)
    rng = make_rng(seed)
    s = config.budget(grid)
    details = {"s": s, "cubes": len(grid), "threshold": config.threshold}

    # Step 1: labelled samples, truncated to Ball(n')
    X = rng.standard_normal((s, params.n))
    labels = _labels(target, X, params.n_prime)

    # Step 2: an empty cube means the samples are too sparse to judge
    cls = classify_cubes(X, labels, params, grid)
    details.update(bc_mass=cls.bc_mass, ec_mass=cls.ec_mass, ic_mass=cls.ic_mass)
    if not cls.all_occupied:
        details["empty_cubes"] = int(np.sum(grid.mask & ~cls.occupied))
        return Verdict("accept", "empty_cube", None, details)

    # Step 3: too much boundary mass
    if cls.bc_mass >= config.threshold:
        return Verdict("reject", "bc_mass_excess",
                       _bc_certificate(X, labels, cls, grid, config.threshold), details)

    # Steps 4-5: a fresh negative point inside Conv(T+)
    positives = X[labels]
    y = rng.standard_normal(params.n)
    y_label = bool(_labels(target, y[None, :], params.n_prime)[0])
    details["fresh_label"] = int(y_label)
    if y_label or len(positives) == 0:
        return Verdict("accept", "fresh_point_positive" if y_label else "no_positives", None, details)
    gens = Hull(positives).vertices if len(positives) > params.n + 1 else positives
    if in_hull(gens, y):
        return Verdict("reject", "hull_violation",
                       {"kind": "hull_violation", "witness_point": y, "positive_generators": gens},
                       details)
    return Verdict("accept", "fresh_point_outside_hull", None, details)


def run_a_prime(target: TargetSet, config: OneSidedConfig, seed, grid: CubeGrid | None = None) -> Verdict:
    """OR of ``config.runs`` independent runs; stops at the first rejection."""
    grid = grid or build_grid(config.grid)
    reasons = []
    for i, child in enumerate(spawn_seeds(seed, config.runs)):
        v = run_a_star(target, config, child, grid)
        reasons.append(v.reason)
        if v.rejected:
            v.details.update(runs_performed=i + 1, run_reasons=reasons)
            return v
    return Verdict("accept", "all_runs_accepted", None,
                   {"runs_performed": config.runs, "run_reasons": reasons})


def verify_certificate(certificate: dict, target: TargetSet, params: GridParams) -> bool:
    """Re-check a rejection certificate using only the target oracle and geometry."""
    kind = certificate.get("kind")
    label = lambda P: _labels(target, np.atleast_2d(np.asarray(P, dtype=float)), params.n_prime)
    if kind == "hull_violation":
        w = np.asarray(certificate["witness_point"], dtype=float)
        G = np.atleast_2d(np.asarray(certificate["positive_generators"], dtype=float))
        return bool(len(G) and np.all(label(G)) and not label(w)[0] and in_hull(G, w))
    if kind == "bc_mass_excess":
        cubes = np.atleast_2d(np.asarray(certificate["boundary_cubes"], dtype=np.int64))
        P = np.atleast_2d(np.asarray(certificate["positive_witnesses"], dtype=float))
        Q = np.atleast_2d(np.asarray(certificate["negative_witnesses"], dtype=float))
        if len(cubes) == 0 or len({tuple(c) for c in cubes}) != len(cubes):
            return False
        if not (np.all(label(P)) and not np.any(label(Q))):
            return False
        ell = params.ell
        for c, p, q in zip(cubes, P, Q):
            lo, hi = cube_bounds(c, ell)
            if np.any(p < lo) or np.any(p >= hi):
                return False
            cq = np.floor(q / ell + 0.5).astype(np.int64)
            if np.max(np.abs(cq - c)) > 1:
                return False
        mass = math.fsum(cube_gaussian_mass(c, params) for c in cubes)
        return mass >= certificate["bound"]
    return False


def runs_for_power(delta0: float, power: float = 2.0 / 3.0) -> int:
    """Fewest independent runs whose OR rejects with probability >= ``power``."""
    if not 0 < delta0 <= 1:
        raise ValueError("per-run rejection rate must lie in (0, 1]")
    if delta0 == 1:
        return 1
    return max(1, math.ceil(math.log(1.0 - power) / math.log(1.0 - delta0)))
