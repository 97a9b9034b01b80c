"""Target sets, hull membership and Monte Carlo volume estimators.

A target set is a membership oracle on R^n.  Convex kinds additionally expose
``distance`` (Euclidean distance to the set, zero inside) and ``depth``
(distance to the boundary for points inside, zero outside), which is all the
thickened-boundary and Ball-theorem estimators need.

Sets serialise to ``{"kind", "params", "seed"}`` dictionaries via
:meth:`TargetSet.to_json` and :func:`target_from_json`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError
from scipy.special import ndtri

from .gauss import make_rng
from .lp import LP_TOL, in_hull


@dataclass(frozen=True)
class HullQuery:
    query_point: np.ndarray
    generators: np.ndarray
    lp_tol: float = LP_TOL


def conv_membership(query: HullQuery) -> bool:
    """Whether the query point lies within ``lp_tol`` of Conv(generators)."""
    return in_hull(query.generators, query.query_point, query.lp_tol)


# --------------------------------------------------------------------------
# target sets


class TargetSet:
    kind: str = "abstract"
    is_convex: bool = False
    n: int

    def contains(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, X):
        return self.contains(X)

    def distance(self, X) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} does not expose a distance")

    def depth(self, X) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} does not expose a boundary depth")

    def params(self) -> dict:
        raise NotImplementedError(f"{self.kind} is not serialisable")

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params(), "seed": getattr(self, "seed", None)}

    def _points(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise ValueError(f"{self.kind} lives in R^{self.n}, got points in R^{X.shape[1]}")
        return X


class FullSpace(TargetSet):
    kind = "full"
    is_convex = True

    def __init__(self, n: int):
        self.n = n

    def contains(self, X):
        return np.ones(len(self._points(X)), dtype=bool)

    def distance(self, X):
        return np.zeros(len(self._points(X)))

    def depth(self, X):
        return np.full(len(self._points(X)), np.inf)

    def params(self):
        return {"n": self.n}


class EmptySet(TargetSet):
    kind = "empty"
    is_convex = True

    def __init__(self, n: int):
        self.n = n

    def contains(self, X):
        return np.zeros(len(self._points(X)), dtype=bool)

    def distance(self, X):
        return np.full(len(self._points(X)), np.inf)

    def depth(self, X):
        return np.zeros(len(self._points(X)))

    def params(self):
        return {"n": self.n}


class Ball(TargetSet):
    """Closed Euclidean ball."""

    kind = "ball"
    is_convex = True

    def __init__(self, radius: float, center=None, n: int | None = None):
        if center is None:
            if n is None:
                raise ValueError("give either a center or a dimension")
            center = np.zeros(n)
        self.center = np.asarray(center, dtype=float)
        self.n = len(self.center)
        self.radius = float(radius)

    def _norms(self, X):
        return np.linalg.norm(self._points(X) - self.center, axis=1)

    def contains(self, X):
        return self._norms(X) <= self.radius

    def distance(self, X):
        return np.maximum(self._norms(X) - self.radius, 0.0)

    def depth(self, X):
        return np.maximum(self.radius - self._norms(X), 0.0)

    def params(self):
        return {"radius": self.radius, "center": self.center.tolist()}


class Box(TargetSet):
    """Axis-aligned closed box ``|x - center| <= half_widths`` (widths may be 0)."""

    kind = "box"
    is_convex = True

    def __init__(self, half_widths, center=None):
        self.half_widths = np.asarray(half_widths, dtype=float)
        self.n = len(self.half_widths)
        self.center = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)

    def contains(self, X):
        return np.all(np.abs(self._points(X) - self.center) <= self.half_widths, axis=1)

    def distance(self, X):
        excess = np.maximum(np.abs(self._points(X) - self.center) - self.half_widths, 0.0)
        return np.linalg.norm(excess, axis=1)

    def depth(self, X):
        slack = self.half_widths - np.abs(self._points(X) - self.center)
        return np.maximum(slack.min(axis=1), 0.0)

    def params(self):
        return {"half_widths": self.half_widths.tolist(), "center": self.center.tolist()}


def _project_onto(x, A, b, clip_radius):
    """Euclidean distance from x to {A p <= b, ||p|| <= clip_radius} (SLSQP)."""
    cons = []
    if len(A):
        cons.append({"type": "ineq", "fun": lambda p: b - A @ p, "jac": lambda p: -A})
    if clip_radius is not None:
        R2 = clip_radius ** 2
        cons.append({"type": "ineq", "fun": lambda p: np.array([R2 - p @ p]),
                     "jac": lambda p: -2.0 * p[None, :]})
    res = minimize(lambda p: 0.5 * np.sum((p - x) ** 2), x.copy(), jac=lambda p: p - x,
                   constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    p = res.x
    viol = 0.0
    if len(A):
        viol = max(viol, float(np.max(A @ p - b)))
    if clip_radius is not None:
        viol = max(viol, float(np.linalg.norm(p) - clip_radius))
    if viol > 1e-7:
        raise RuntimeError(f"projection failed to reach feasibility ({viol:.2e})")
    return float(np.linalg.norm(p - x))


class Polytope(TargetSet):
    """Intersection of halfspaces ``a_i . x <= b_i``, optionally clipped to a ball.

    With ``clip_radius`` set, the set is {A x <= b} intersected with
    Ball(clip_radius), which makes any polytope bounded.
    """

    kind = "halfspace_intersection"
    is_convex = True

    def __init__(self, normals, offsets, clip_radius: float | None = None):
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        if len(self.normals) != len(self.offsets):
            raise ValueError("one offset per normal")
        self.n = self.normals.shape[1]
        self.clip_radius = None if clip_radius is None else float(clip_radius)
        self._norms = np.linalg.norm(self.normals, axis=1)

    def _slack(self, X):
        return self.offsets - X @ self.normals.T

    def contains(self, X):
        X = self._points(X)
        inside = np.all(self._slack(X) >= 0, axis=1)
        if self.clip_radius is not None:
            inside &= np.linalg.norm(X, axis=1) <= self.clip_radius
        return inside

    def depth(self, X):
        X = self._points(X)
        d = np.min(self._slack(X) / self._norms, axis=1) if len(self.offsets) else np.full(len(X), np.inf)
        if self.clip_radius is not None:
            d = np.minimum(d, self.clip_radius - np.linalg.norm(X, axis=1))
        return np.maximum(d, 0.0)

    def distance_lower_bound(self, X):
        """max over constraints of the violation, a cheap lower bound on distance."""
        X = self._points(X)
        lb = np.max(-self._slack(X) / self._norms, axis=1) if len(self.offsets) else np.zeros(len(X))
        if self.clip_radius is not None:
            lb = np.maximum(lb, np.linalg.norm(X, axis=1) - self.clip_radius)
        return np.maximum(lb, 0.0)

    def distance(self, X, cutoff: float | None = None):
        """Distance to the set.

        With ``cutoff`` given, points whose lower bound already exceeds it
        skip the projection and report the lower bound instead.
        """
        X = self._points(X)
        out = self.distance_lower_bound(X)
        inside = self.contains(X)
        out[inside] = 0.0
        exact_single = len(self.offsets) == 1 and self.clip_radius is None
        if exact_single or (len(self.offsets) == 0):
            return out
        todo = ~inside
        if cutoff is not None:
            todo &= out <= cutoff
        for i in np.flatnonzero(todo):
            out[i] = _project_onto(X[i], self.normals, self.offsets, self.clip_radius)
        return out

    def params(self):
        return {"normals": self.normals.tolist(), "offsets": self.offsets.tolist(),
                "clip_radius": self.clip_radius}


def Halfspace(normal, offset: float = 0.0) -> Polytope:
    """The single halfspace ``normal . x <= offset``."""
    return Polytope(np.asarray(normal, dtype=float)[None, :], [offset])


class RandomPolytope(Polytope):
    """A draw from the random-polytope distribution: {x : x . y_i <= r^2 for all i}.

    The normals y_i are uniform on the sphere of radius r.  Construction is a
    deterministic function of ``(n, N, r, seed)``.
    """

    kind = "random_polytope"

    def __init__(self, n: int, N: int, r: float, seed, clip_radius: float | None = None,
                 normals=None):
        if N < 1 or r <= 0:
            raise ValueError("need N >= 1 and r > 0")
        if normals is None:
            g = make_rng(seed).standard_normal((N, n))
            normals = r * g / np.linalg.norm(g, axis=1, keepdims=True)
        self.r = float(r)
        self.N = int(N)
        self.seed = seed if isinstance(seed, (int, type(None))) else None
        super().__init__(normals, np.full(N, r * r), clip_radius)

    def params(self):
        return {"n": self.n, "N": self.N, "r": self.r, "clip_radius": self.clip_radius}


class Hull(TargetSet):
    """Closed convex hull of a finite point set (``cube_hull`` kind).

    Full-dimensional hulls are converted to facet inequalities with qhull;
    degenerate ones fall back to one LP per query.
    """

    kind = "cube_hull"
    is_convex = True

    def __init__(self, points, n: int | None = None, tol: float = 1e-9):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            if n is None:
                raise ValueError("an empty hull needs an explicit dimension")
            pts = pts.reshape(0, n)
        self.points = np.atleast_2d(pts)
        self.n = self.points.shape[1]
        self.tol = tol
        self._eq = None
        self.vertices = self.points
        if len(self.points) == 0:
            return
        if self.n == 1:
            lo, hi = self.points.min(), self.points.max()
            self.vertices = np.array([[lo], [hi]]) if hi > lo else np.array([[lo]])
            return
        try:
            hull = ConvexHull(self.points)
        except (QhullError, ValueError):
            return
        self._eq = hull.equations
        self.vertices = self.points[hull.vertices]

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def vertex_key(self) -> tuple:
        return tuple(sorted(map(tuple, np.round(self.vertices, 12).tolist())))

    def contains(self, X):
        X = self._points(X)
        if self.is_empty:
            return np.zeros(len(X), dtype=bool)
        if self.n == 1:
            lo, hi = self.vertices[0, 0], self.vertices[-1, 0]
            return (X[:, 0] >= lo - self.tol) & (X[:, 0] <= hi + self.tol)
        if self._eq is not None:
            return np.all(X @ self._eq[:, :-1].T + self._eq[:, -1] <= self.tol, axis=1)
        return np.array([in_hull(self.vertices, x) for x in X], dtype=bool)

    def _as_polytope(self):
        if self.n == 1:
            lo, hi = self.vertices[0, 0], self.vertices[-1, 0]
            return Polytope([[1.0], [-1.0]], [hi, -lo])
        return Polytope(self._eq[:, :-1], -self._eq[:, -1])

    def distance(self, X):
        X = self._points(X)
        if self.is_empty:
            return np.full(len(X), np.inf)
        if self.n > 1 and self._eq is None:
            raise NotImplementedError("distance to a degenerate hull")
        return self._as_polytope().distance(X)

    def depth(self, X):
        X = self._points(X)
        if self.is_empty or (self.n > 1 and self._eq is None):
            return np.zeros(len(X))
        return self._as_polytope().depth(X)

    def params(self):
        return {"n": self.n, "points": self.points.tolist()}


class Stripe(TargetSet):
    """Parity-of-interval set along the first coordinate.

    Thresholds tau_1 < ... < tau_N cut the line into N+1 intervals of equal
    standard-normal mass; x is in the set when x_1's interval index is even.
    """

    kind = "stripe"
    is_convex = False

    def __init__(self, n: int, N: int):
        if N < 1:
            raise ValueError("need at least one threshold")
        self.n = n
        self.N = int(N)
        self.thresholds = ndtri(np.arange(1, N + 1) / (N + 1))

    def interval_index(self, X):
        return np.searchsorted(self.thresholds, self._points(X)[:, 0], side="right")

    def contains(self, X):
        return self.interval_index(X) % 2 == 0

    def far_from_convex_lower_bound(self) -> float:
        return 0.5 - 1.0 / (self.N + 1)

    def params(self):
        return {"n": self.n, "N": self.N}


class ShellUnion(TargetSet):
    """Union of selected radial shells Ball(t_i) minus Ball(t_{i-1}).

    A point with ``||x|| == t_i`` belongs to shell i; points beyond t_M are
    outside, and the origin belongs to shell 1.
    """

    kind = "shell_union"
    is_convex = False

    def __init__(self, n: int, boundaries, included):
        self.n = n
        self.boundaries = np.asarray(boundaries, dtype=float)
        self.included = np.asarray(included, dtype=bool)
        if len(self.boundaries) != len(self.included) + 1:
            raise ValueError("need M + 1 boundaries for M shells")

    def shell_index(self, X):
        """1-based shell index of each point, 0 for points outside Ball(t_M)."""
        radii = np.linalg.norm(self._points(X), axis=1)
        idx = np.searchsorted(self.boundaries, radii, side="left")
        idx = np.maximum(idx, 1)
        idx[radii > self.boundaries[-1]] = 0
        return idx

    def contains(self, X):
        idx = self.shell_index(X)
        out = np.zeros(len(idx), dtype=bool)
        ok = idx > 0
        out[ok] = self.included[idx[ok] - 1]
        return out

    def params(self):
        return {"n": self.n, "boundaries": self.boundaries.tolist(),
                "included": self.included.astype(int).tolist()}


class CustomSet(TargetSet):
    kind = "custom"

    def __init__(self, n: int, fn, is_convex: bool = False):
        self.n = n
        self.fn = fn
        self.is_convex = is_convex

    def contains(self, X):
        return np.asarray(self.fn(self._points(X)), dtype=bool)


def target_from_json(obj: dict) -> TargetSet:
    """Rebuild a target set from its ``{"kind", "params", "seed"}`` description."""
    kind = obj.get("kind")
    p = dict(obj.get("params", {}))
    seed = obj.get("seed")
    if kind == "full":
        return FullSpace(p["n"])
    if kind == "empty":
        return EmptySet(p["n"])
    if kind == "ball":
        if "center" in p:
            return Ball(p["radius"], center=p["center"])
        return Ball(p["radius"], n=p["n"])
    if kind == "box":
        return Box(p["half_widths"], p.get("center"))
    if kind in ("halfspace_intersection", "halfspace"):
        if kind == "halfspace":
            return Halfspace(p["normal"], p.get("offset", 0.0))
        return Polytope(p["normals"], p["offsets"], p.get("clip_radius"))
    if kind == "random_polytope":
        if seed is None:
            raise ValueError("random_polytope needs a seed")
        return RandomPolytope(p["n"], p["N"], p["r"], seed, p.get("clip_radius"))
    if kind == "cube_hull":
        return Hull(p["points"], n=p.get("n"))
    if kind == "stripe":
        return Stripe(p["n"], p["N"])
    if kind == "shell_union":
        return ShellUnion(p["n"], p["boundaries"], p["included"])
    raise ValueError(f"unknown target kind {kind!r}")


# --------------------------------------------------------------------------
# Monte Carlo estimators


def _binomial_se(p: float, m: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / m)


def estimate_distance(A: TargetSet, B: TargetSet, samples: int, seed) -> tuple[float, float]:
    """Gaussian volume of the symmetric difference, with its binomial standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if A.n != B.n:
        raise ValueError("targets live in different dimensions")
    X = make_rng(seed).standard_normal((samples, A.n))
    est = float(np.mean(A.contains(X) != B.contains(X)))
    return est, _binomial_se(est, samples)


@dataclass(frozen=True)
class BoundaryVolumeEstimate:
    estimate: float
    std_error: float
    samples_used: int
    alpha: float
    K: float | None


def thickened_boundary_bound(n: int, K: float, alpha: float) -> float:
    return 20.0 * n ** 0.625 * K * math.sqrt(alpha)


def in_thickened_boundary(C: TargetSet, X, alpha: float) -> np.ndarray:
    """Membership in the set of points within distance ``alpha`` of the boundary of C."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    inside = C.contains(X)
    out = np.zeros(len(X), dtype=bool)
    if inside.any():
        out[inside] = C.depth(X[inside]) <= alpha
    outside = ~inside
    if outside.any():
        Xo = X[outside]
        if isinstance(C, Polytope):
            d = C.distance(Xo, cutoff=alpha)
        else:
            d = C.distance(Xo)
        out[outside] = d <= alpha
    return out


def estimate_thickened_boundary_volume(C: TargetSet, alpha: float, samples: int, seed,
                                       K: float | None = None) -> BoundaryVolumeEstimate:
    """Monte Carlo estimate of Vol(boundary(C) + Ball(alpha)) for convex C.

    alpha must satisfy 0 < alpha < n^{-3/4}.
    """
    if not C.is_convex:
        raise ValueError("thickened-boundary estimation needs a convex target")
    if not 0.0 < alpha < C.n ** -0.75:
        raise ValueError(f"alpha must lie in (0, n^(-3/4)) = (0, {C.n ** -0.75:.4g}), got {alpha}")
    X = make_rng(seed).standard_normal((samples, C.n))
    est = float(np.mean(in_thickened_boundary(C, X, alpha)))
    return BoundaryVolumeEstimate(est, _binomial_se(est, samples), samples, alpha, K)


def ball_theorem_ratio(C: TargetSet, h: float, samples: int, seed) -> tuple[float, float]:
    """Estimate Vol(C_h \\ C) / h and its standard error."""
    if h <= 0:
        raise ValueError("h must be positive")
    X = make_rng(seed).standard_normal((samples, C.n))
    inside = C.contains(X)
    hit = np.zeros(samples, dtype=bool)
    Xo = X[~inside]
    if len(Xo):
        d = C.distance(Xo, cutoff=h) if isinstance(C, Polytope) else C.distance(Xo)
        hit[~inside] = d <= h
    p = float(hit.mean())
    return p / h, _binomial_se(p, samples) / h


def check_ball_theorem(C: TargetSet, h: float, samples: int, seed) -> bool:
    """Whether the estimate of Vol(C_h \\ C)/h minus 4 standard errors is <= 4 n^{1/4}."""
    ratio, se = ball_theorem_ratio(C, h, samples, seed)
    return ratio - 4.0 * se <= 4.0 * C.n ** 0.25


# --------------------------------------------------------------------------
# appendix lemma checks


def _random_directions(rng, count, n):
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ray_boundary_points(P: Polytope, directions) -> np.ndarray:
    """Boundary points t*u of a polytope containing the origin along unit rays u."""
    proj = directions @ P.normals.T
    with np.errstate(divide="ignore"):
        t = np.where(proj > 0, P.offsets / np.where(proj > 0, proj, 1.0), np.inf)
    tmax = t.min(axis=1)
    if P.clip_radius is not None:
        tmax = np.minimum(tmax, P.clip_radius)
    if np.any(~np.isfinite(tmax)):
        raise ValueError("polytope is unbounded along a sampled ray")
    return directions * tmax[:, None]


def _scaled_polytope(P: Polytope, factor: float) -> Polytope:
    clip = None if P.clip_radius is None else factor * P.clip_radius
    return Polytope(P.normals, factor * P.offsets, clip)


def bounded_random_polytope(n: int, N: int, r: float, rng, max_tries: int = 1000) -> RandomPolytope:
    """Draw random polytopes until one is bounded (normals surround the origin)."""
    for _ in range(max_tries):
        seed = int(rng.integers(2 ** 63))
        P = RandomPolytope(n, N, r, seed)
        if in_hull(P.normals, np.zeros(n)) and not _origin_on_hull_boundary(P):
            return P
    raise RuntimeError("could not draw a bounded polytope")


def _origin_on_hull_boundary(P: Polytope) -> bool:
    try:
        eq = ConvexHull(P.normals).equations
    except (QhullError, ValueError):
        return True
    return bool(np.max(eq[:, -1]) > -1e-9)


def check_appendix_lemmas(config: dict) -> dict:
    """Numerically test one of the three lemmas behind the thickened-boundary bound.

    ``config`` keys: ``lemma`` ("A.1", "A.2" or "A.3"), ``family``, ``n``,
    ``samples``, ``seed`` and the lemma parameters (``rho``, ``alpha``,
    ``beta``, ``K``, plus family-specific ones).  The returned report carries
    ``passed`` and the worst-case ``margin`` (bound minus observed, so a
    non-negative margin means the inequality held).
    """
    lemma = config["lemma"]
    n = int(config.get("n", 2))
    rng = make_rng(config.get("seed", 0))
    samples = int(config.get("samples", 100_000))
    alpha = float(config["alpha"])
    tol = float(config.get("tol", 1e-7))
    family = config.get("family")

    if lemma == "A.1":
        rho_ = float(config["rho"])
        if family == "segment":
            half = np.zeros(n)
            half[0] = float(config.get("length", 2.0)) / 2.0
        elif family in (None, "box"):
            width = float(config.get("width", rho_))
            if width >= 2 * rho_:
                raise ValueError("box must be thinner than 2*rho to contain no rho-ball")
            half = np.full(n, float(config.get("extent", 1.0)))
            half[0] = width / 2.0
        else:
            raise ValueError(f"unknown family {family!r} for A.1")
        C = Box(half)
        X = rng.standard_normal((samples, n))
        p = float(np.mean(C.distance(X) <= alpha))
        se = _binomial_se(p, samples)
        bound = 2.0 * (n * rho_ + alpha)
        observed = p - 4.0 * se
        return {"lemma": lemma, "family": family or "box", "estimate": p, "std_error": se,
                "bound": bound, "margin": bound - observed, "passed": observed <= bound}

    if lemma == "A.2":
        rho_ = float(config["rho"])
        if not rho_ > alpha:
            raise ValueError("A.2 needs rho > alpha")
        beta = alpha / rho_
        dirs = _random_directions(rng, samples, n)
        if family in (None, "ball"):
            # (1 - beta) Ball(rho) has radius rho - alpha; boundary points sit at rho
            dists = np.full(samples, rho_ - (1.0 - beta) * rho_)
        elif family == "polytope":
            P = bounded_random_polytope(n, int(config.get("N", 16)), rho_, rng)
            Z = ray_boundary_points(P, dirs)
            shrunk = _scaled_polytope(P, 1.0 - beta)
            dists = shrunk.distance(Z)
        else:
            raise ValueError(f"unknown family {family!r} for A.2")
        worst = float(dists.min())
        return {"lemma": lemma, "family": family or "ball", "min_distance": worst, "bound": alpha,
                "margin": worst - alpha, "passed": worst >= alpha - tol}

    if lemma == "A.3":
        K = float(config["K"])
        beta = float(config["beta"])
        if not (K > 1 and 0 < beta < 1):
            raise ValueError("A.3 needs K > 1 and 0 < beta < 1")
        dirs = _random_directions(rng, samples, n)
        offsets = _random_directions(rng, samples, n) * (alpha * rng.random(samples) ** (1.0 / n))[:, None]
        if family in (None, "ball"):
            V = dirs * K + offsets
            dists = np.maximum(np.linalg.norm(V, axis=1) - (1.0 - beta) * K, 0.0)
        elif family == "polytope":
            P = bounded_random_polytope(n, int(config.get("N", 16)), float(config.get("r", 1.0)), rng)
            P = Polytope(P.normals, P.offsets, clip_radius=K)
            V = ray_boundary_points(P, dirs) + offsets
            dists = _scaled_polytope(P, 1.0 - beta).distance(V)
        else:
            raise ValueError(f"unknown family {family!r} for A.3")
        bound = 2.0 * K * beta + alpha
        worst = float(dists.max())
        return {"lemma": lemma, "family": family or "ball", "max_distance": worst, "bound": bound,
                "margin": bound - worst, "passed": worst <= bound + tol}

    raise ValueError(f"unknown lemma {lemma!r}")
