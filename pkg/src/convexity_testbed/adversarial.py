"""Hard instances for sample-based testing and the experiments that probe them.

Yes-instances are random polytopes cut out by N halfspaces tangent to
Ball(r).  No-instances are unions of equal-mass radial shells, each kept with
the probability rho(t_i) that a point at radius t_i survives a random
polytope.  The product law E_no* labels points independently with those same
marginals, and the distinguishing experiment measures how far the polytope's
joint label law sits from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex import RandomPolytope, ShellUnion
from .gauss import CapTable, adaptive_simpson, cap, chi_density, make_rng, rho
from .lp import in_hull

MAX_HISTOGRAM_Q = 12
MIN_DISTINGUISH_TRIALS = 10_000


# --------------------------------------------------------------------------
# D_yes


def sample_dyes(n: int, N: int, r: float, seed) -> RandomPolytope:
    """Polytope {x : x . y_i <= r^2 for all i} with y_i uniform on S^{n-1}(r)."""
    if N < 1 or r <= 0:
        raise ValueError("need N >= 1 and r > 0")
    return RandomPolytope(n, N, r, seed)


def _sphere(rng, count: int, n: int, radius: float, batch: tuple = ()) -> np.ndarray:
    g = rng.standard_normal(batch + (count, n))
    return radius * g / np.linalg.norm(g, axis=-1, keepdims=True)


def membership_matrix(points, polytope: RandomPolytope) -> np.ndarray:
    """q x N matrix whose (i, j) entry is 1 iff halfspace j contains point i."""
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    return (Z @ polytope.normals.T <= polytope.r ** 2).astype(np.int8)


def nice_matrix_check(matrix) -> bool:
    """At most sqrt(N) zeros overall and at most one zero in each column."""
    M = np.atleast_2d(np.asarray(matrix))
    zeros = M == 0
    N = M.shape[1]
    return bool(zeros.sum() <= math.sqrt(N) and (zeros.sum(axis=0) <= 1).all())


# --------------------------------------------------------------------------
# shells and D_no


def default_shell_count(n: int) -> int:
    return max(2 ** math.ceil(math.sqrt(n)), 64)


def build_shells(n: int, M: int, tol: float = 1e-13, quad_tol: float = 1e-14) -> np.ndarray:
    """Radii 0 = t_0 < ... < t_M = 2 sqrt(n) cutting Ball(2 sqrt(n)) into M shells of equal mass.

    Each t_i is found by bisection on the mass of [t_{i-1}, t], so the error
    does not build up along the partition.  The last shell takes whatever mass
    remains, which the per-shell tolerance keeps equal to the others.
    """
    if M < 1:
        raise ValueError("need at least one shell")
    top = 2.0 * math.sqrt(n)
    f = chi_density(n)
    share = adaptive_simpson(f, 0.0, top, quad_tol) / M
    t = [0.0]
    for _ in range(M - 1):
        lo_edge = t[-1]
        lo, hi = lo_edge, top
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if adaptive_simpson(f, lo_edge, mid, quad_tol) < share:
                lo = mid
            else:
                hi = mid
        t.append(0.5 * (lo + hi))
    t.append(top)
    return np.array(t)


@dataclass
class ShellPartition:
    n: int
    boundaries: np.ndarray
    included: np.ndarray
    rho_at_boundaries: np.ndarray
    seed: int | None = None

    @property
    def M(self) -> int:
        return len(self.included)

    def target(self) -> ShellUnion:
        return ShellUnion(self.n, self.boundaries, self.included)

    def to_dict(self) -> dict:
        return {"n": self.n, "boundaries": self.boundaries.tolist(),
                "included": self.included.astype(int).tolist(),
                "rho_at_boundaries": self.rho_at_boundaries.tolist(), "seed": self.seed}


def make_rho(r: float, N: int, n: int):
    """rho as a one-argument function of the radius."""
    table = CapTable(n)
    return lambda x: rho(float(x), r, N, table)


def sample_dno(n: int, boundaries, rho_fn, seed) -> ShellPartition:
    """Keep shell i independently with probability rho(t_i)."""
    boundaries = np.asarray(boundaries, dtype=float)
    probs = np.array([rho_fn(t) for t in boundaries[1:]])
    included = make_rng(seed).random(len(probs)) < probs
    return ShellPartition(n, boundaries, included, probs, seed if isinstance(seed, int) else None)


def sample_eno_star(points, rho_fn, seed) -> np.ndarray:
    """Independent labels, point i positive with probability rho(||z_i||)."""
    Z = np.asarray(points, dtype=float).reshape(-1, np.shape(points)[-1] if np.size(points) else 1)
    probs = np.array([rho_fn(np.linalg.norm(z)) for z in Z])
    return (make_rng(seed).random(len(probs)) < probs).astype(np.int8)


def rho_band_deviation(boundaries, rho_fn, points_per_shell: int = 32) -> float:
    """max over shells of |rho(x) - rho(t_i)| for x sampled on [t_{i-1}, t_i]."""
    b = np.asarray(boundaries, dtype=float)
    worst = 0.0
    for lo, hi in zip(b[:-1], b[1:]):
        ref = rho_fn(hi)
        for x in np.linspace(lo, hi, points_per_shell):
            worst = max(worst, abs(rho_fn(x) - ref))
    return worst


# --------------------------------------------------------------------------
# typicality


@dataclass
class TypicalityReport:
    fsa: np.ndarray
    pairwise_fsa: np.ndarray
    pairwise_indeterminate: bool
    is_typical: bool | None
    thresholds: dict
    mc_budget: int
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"fsa": self.fsa.tolist(), "pairwise_fsa": self.pairwise_fsa.tolist(),
                "pairwise_indeterminate": self.pairwise_indeterminate, "is_typical": self.is_typical,
                "thresholds": self.thresholds, "mc_budget": self.mc_budget, "notes": self.notes}


def typicality_check(points, r: float, mc_budget: int, seed, exponents=(0.49, 0.51, 0.96)) -> TypicalityReport:
    """Exact single-cap areas plus Monte Carlo pairwise cap intersections.

    ``exponents`` are (upper, lower, pairwise) in e^{-c r^2}.  When the
    expected number of hits at the pairwise threshold is below 10, the
    pairwise condition is reported as indeterminate; ``is_typical`` is then
    None unless the single-point test already fails.
    """
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    q, n = Z.shape
    table = CapTable(n)
    norms = np.linalg.norm(Z, axis=1)
    fsa = np.array([0.0 if x <= r else cap(table, r / x) for x in norms])
    up, low, pair = (math.exp(-c * r * r) for c in exponents)
    rng = make_rng(seed)
    Y = _sphere(rng, mc_budget, n, r)
    hits = (Z @ Y.T > r * r).astype(np.float64)
    pairwise = hits @ hits.T / mc_budget
    notes = []
    single_ok = bool(np.all((fsa >= low) & (fsa <= up)))
    indeterminate = mc_budget * pair < 10.0
    if indeterminate:
        notes.append("pairwise threshold below Monte Carlo resolution")
    off = ~np.eye(q, dtype=bool)
    pair_ok = bool(np.all(pairwise[off] <= pair))
    if not single_ok:
        verdict = False
    elif indeterminate:
        verdict = None
    else:
        verdict = pair_ok
    return TypicalityReport(fsa, pairwise, indeterminate, verdict,
                            {"fsa_upper": up, "fsa_lower": low, "pairwise": pair,
                             "exponents": list(exponents)}, mc_budget, notes)


# --------------------------------------------------------------------------
# distinguishing experiment


def _product_pmf(p: np.ndarray) -> np.ndarray:
    """pmf over codes sum_i b_i 2^i of independent Bernoulli(p_i) bits."""
    q = len(p)
    codes = np.arange(2 ** q)
    bits = (codes[:, None] >> np.arange(q)[None, :]) & 1
    return np.prod(np.where(bits == 1, p[None, :], 1.0 - p[None, :]), axis=1)


def default_query_points(n: int, q: int, radius: float, rng) -> np.ndarray:
    return _sphere(rng, q, n, radius)


def distinguishing_experiment(n: int, q: int, N: int, r: float, trials: int, seed,
                              points=None, radius: float | None = None,
                              bootstrap: int = 200, batch: int = 2000) -> dict:
    """Empirical TV between the polytope label law and the product law on q fixed points.

    Without explicit ``points``, q random directions are placed at
    ``radius`` (default 2r, inside the band where rho is bounded away from 0
    and 1).
    """
    if q > MAX_HISTOGRAM_Q:
        raise ValueError(f"q = {q} exceeds the histogram limit of {MAX_HISTOGRAM_Q}")
    if trials < MIN_DISTINGUISH_TRIALS:
        raise ValueError(f"need at least {MIN_DISTINGUISH_TRIALS} trials, got {trials}")
    rng = make_rng(seed)
    if points is None:
        Z = default_query_points(n, q, 2.0 * r if radius is None else radius, rng)
    else:
        Z = np.atleast_2d(np.asarray(points, dtype=float))
        if Z.shape != (q, n):
            raise ValueError(f"expected {q} points in R^{n}, got shape {Z.shape}")
    table = CapTable(n)
    p = np.array([rho(float(np.linalg.norm(z)), r, N, table) for z in Z])
    counts = np.zeros(2 ** q, dtype=np.int64)
    marg = np.zeros(q, dtype=np.int64)
    bad = 0
    weights = 1 << np.arange(q)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        Y = _sphere(rng, N, n, r, (b,))                       # (b, N, n)
        inside = np.einsum("qn,bkn->bqk", Z, Y) <= r * r      # (b, q, N)
        labels = inside.all(axis=2)
        counts += np.bincount(labels @ weights, minlength=2 ** q)
        marg += labels.sum(axis=0)
        zeros = ~inside
        nice = (zeros.sum(axis=(1, 2)) <= math.sqrt(N)) & (zeros.sum(axis=1).max(axis=1) <= 1)
        bad += int(np.sum(~nice))
        done += b
    emp = counts / trials
    pmf = _product_pmf(p)
    tv = 0.5 * float(np.abs(emp - pmf).sum())
    boot = rng.multinomial(trials, emp, size=bootstrap) / trials
    boot_tv = 0.5 * np.abs(boot - pmf[None, :]).sum(axis=1)
    freq = marg / trials
    sigma = np.sqrt(p * (1.0 - p) / trials)
    return {
        "n": n, "q": q, "N": N, "r": r, "trials": trials,
        "points": Z.tolist(), "rho": p.tolist(),
        "tv": tv, "tv_ci": [float(np.quantile(boot_tv, 0.025)), float(np.quantile(boot_tv, 0.975))],
        "marginal_frequency": freq.tolist(), "marginal_deviation": (freq - p).tolist(),
        "marginal_sigma": sigma.tolist(),
        "bad_matrix_frequency": bad / trials,
        "histogram": counts.tolist(), "product_pmf": pmf.tolist(),
    }


def marginal_identity(n: int, N: int, r: float, radius: float, polytopes: int, seed) -> dict:
    """Frequency with which (radius, 0, ..., 0) lies in a fresh random polytope, against rho."""
    rng = make_rng(seed)
    z = np.zeros(n)
    z[0] = radius
    hits = 0
    done = 0
    while done < polytopes:
        b = min(2000, polytopes - done)
        Y = _sphere(rng, N, n, r, (b,))
        hits += int(np.sum(np.all(Y @ z <= r * r, axis=1)))
        done += b
    expected = rho(radius, r, N, CapTable(n))
    freq = hits / polytopes
    return {"radius": radius, "frequency": freq, "rho": expected,
            "sigma": math.sqrt(max(expected * (1.0 - expected), 0.0) / polytopes)}


# --------------------------------------------------------------------------
# shattering


def _extreme(X: np.ndarray, i: int) -> bool:
    """Whether X[i] is outside the hull of the other rows."""
    x = X[i]
    others = np.delete(X, i, axis=0)
    # x . x separates x from the rest when every other projection is smaller
    if np.all(others @ x < x @ x):
        return True
    return not in_hull(others, x)


def shattering_experiment(n: int, M: int, trials: int, seed) -> dict:
    """Frequency with which M Gaussian points are all vertices of their hull.

    Also reports the two tail frequencies that drive the argument:
    ||x|| <= sqrt(n)/10 and x . e_1 >= sqrt(n)/10, per point.
    """
    if M < 2:
        raise ValueError("need M >= 2")
    rng = make_rng(seed)
    shattered = 0
    small_norm = 0
    big_proj = 0
    cut = math.sqrt(n) / 10.0
    for _ in range(trials):
        X = rng.standard_normal((M, n))
        small_norm += int(np.sum(np.linalg.norm(X, axis=1) <= cut))
        big_proj += int(np.sum(X[:, 0] >= cut))
        shattered += all(_extreme(X, i) for i in range(M))
    freq = shattered / trials
    return {"n": n, "M": M, "trials": trials, "frequency": freq,
            "std_error": math.sqrt(freq * (1.0 - freq) / trials),
            "small_norm_frequency": small_norm / (trials * M),
            "large_projection_frequency": big_proj / (trials * M),
            "small_norm_target": 0.5 * M ** -2.0, "large_projection_target": 0.5 * M ** -3.0}
