"""Proper learning over the cube-hull cover, and the learn-then-test reduction.

The learner is plain empirical risk minimisation: one batch of labelled
samples is scored against every cover element and the first minimiser is
returned.  A two-stage variant first fits the hull of the positive samples
and then picks the cover element closest to it in Gaussian distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convex import Hull, TargetSet
from .gauss import make_rng, spawn_seeds
from .grid import CubeGrid, GridParams, build_grid, generate_cover
from .tester_one_sided import Verdict


@dataclass(frozen=True)
class LearnConfig:
    epsilon: float
    delta: float
    learn_samples: int | None = None
    cover_subset_cap: int = 2 ** 20
    estimate_samples: int | None = None
    two_stage: bool = False
    cover_mode: str = "full"

    def __post_init__(self):
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ValueError("epsilon and delta must lie in (0, 1)")
        for name in ("learn_samples", "estimate_samples"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")

    def learn_budget(self, cover_size: int) -> int:
        """Occam bound for a consistent learner over a finite class."""
        if self.learn_samples is not None:
            return self.learn_samples
        return math.ceil((math.log(cover_size) + math.log(1.0 / self.delta)) / self.epsilon)

    def estimate_budget(self, cover_size: int) -> int:
        """Hoeffding size putting every distance estimate within eps/5 w.p. 1 - delta/2."""
        if self.estimate_samples is not None:
            return self.estimate_samples
        return math.ceil(math.log(4.0 * cover_size / self.delta) * 50.0 / self.epsilon ** 2)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class LearnResult:
    hypothesis: Hull
    empirical_error: float
    candidates_scored: int
    errors: np.ndarray
    learn_samples: int
    estimate_samples: int = 0
    stage_one: Hull | None = None

    def summary(self) -> dict:
        h = self.hypothesis
        return {"kind": h.kind, "vertices": h.vertices.tolist(), "empirical_error": self.empirical_error,
                "candidates_scored": self.candidates_scored, "learn_samples": self.learn_samples,
                "estimate_samples": self.estimate_samples}


def _membership_matrix(cover: list[Hull], X: np.ndarray) -> np.ndarray:
    """Row k holds cover[k]'s membership of every point of X."""
    if X.shape[1] == 1 and all(h.n == 1 for h in cover):
        lo = np.array([h.vertices[0, 0] if not h.is_empty else np.inf for h in cover])
        hi = np.array([h.vertices[-1, 0] if not h.is_empty else -np.inf for h in cover])
        x = X[:, 0]
        tol = cover[0].tol
        return (x[None, :] >= lo[:, None] - tol) & (x[None, :] <= hi[:, None] + tol)
    return np.array([h.contains(X) for h in cover])


def proper_learn_via_cover(target: TargetSet, config: LearnConfig, grid: GridParams, seed,
                           cover: list[Hull] | None = None, cube_grid: CubeGrid | None = None) -> LearnResult:
    """Learn ``target`` with a hypothesis drawn from the cube-hull cover."""
    if cover is None:
        cover = generate_cover(grid, config.cover_subset_cap, config.cover_mode,
                               cube_grid or build_grid(grid))
    rng = make_rng(seed)
    m = config.learn_budget(len(cover))
    X = rng.standard_normal((m, grid.n))
    y = np.asarray(target(X), dtype=bool)
    if not config.two_stage:
        errors = (_membership_matrix(cover, X) != y[None, :]).mean(axis=1)
        best = int(np.argmin(errors))
        return LearnResult(cover[best], float(errors[best]), len(cover), errors, m)
    # stage 1: any hypothesis fitting the data, here the hull of the positives
    H = Hull(X[y], n=grid.n)
    k = config.estimate_budget(len(cover))
    Z = rng.standard_normal((k, grid.n))
    in_h = H.contains(Z)
    dist = (_membership_matrix(cover, Z) != in_h[None, :]).mean(axis=1)
    best = int(np.argmin(dist))
    emp = float(np.mean(cover[best].contains(X) != y))
    return LearnResult(cover[best], emp, len(cover), dist, m, k, H)


def holdout_sample_count(epsilon: float, delta: float, constant: float = 8.0) -> int:
    return math.ceil(constant * math.log(2.0 / delta) / epsilon)


def ggr_test(target: TargetSet, config: LearnConfig, grid: GridParams, seed,
             test_constant: float = 8.0, cover: list[Hull] | None = None) -> Verdict:
    """Learn at (eps/2, delta/2), then accept iff fresh disagreement <= 3 eps / 4."""
    learn_seed, test_seed = spawn_seeds(seed, 2)
    half = LearnConfig(config.epsilon / 2.0, config.delta / 2.0, config.learn_samples,
                       config.cover_subset_cap, config.estimate_samples, config.two_stage,
                       config.cover_mode)
    result = proper_learn_via_cover(target, half, grid, learn_seed, cover)
    m = holdout_sample_count(config.epsilon, config.delta, test_constant)
    Z = make_rng(test_seed).standard_normal((m, grid.n))
    disagreement = float(np.mean(result.hypothesis.contains(Z) != np.asarray(target(Z), dtype=bool)))
    threshold = 0.75 * config.epsilon
    details = {"hypothesis": result.summary(), "test_samples": m, "disagreement": disagreement,
               "threshold": threshold, "candidates_scored": result.candidates_scored,
               "learn_samples": result.learn_samples}
    if disagreement <= threshold:
        return Verdict("accept", "hypothesis_consistent", None, details)
    return Verdict("reject", "disagreement_excess", None, details)
