"""The cube lattice covering Ball(2 n'), its sample-driven classification and the cube-hull cover.

Cubes are half-open translates ``[-l/2, l/2)^n + l * (i_1, ..., i_n)``.  The
grid keeps a dense boolean mask over the bounding box of index tuples, so
classification is a handful of vectorised array operations.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .convex import Hull
from .lp import in_hull

EXTERNAL, BOUNDARY, INTERNAL = 0, 1, 2
CLASS_NAMES = {EXTERNAL: "external", BOUNDARY: "boundary", INTERNAL: "internal"}


class GridInfeasible(RuntimeError):
    """The requested grid or cover would exceed its size cap."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class HypothesisViolation(RuntimeError):
    """Some cube holds no sample, so the internal-cube lemma does not apply."""


@dataclass(frozen=True)
class GridParams:
    """Side length ``ell`` and radius ``n_prime``, defaulting to eps^3/n^4 and
    (n + 4 sqrt(n ln(4/eps)))^{1/2}; either may be overridden for small runs."""

    n: int
    epsilon: float
    ell: float | None = None
    n_prime: float | None = None
    cube_cap: int = 10 ** 7
    ell_overridden: bool = field(init=False)
    n_prime_overridden: bool = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        object.__setattr__(self, "ell_overridden", self.ell is not None)
        object.__setattr__(self, "n_prime_overridden", self.n_prime is not None)
        if self.ell is None:
            object.__setattr__(self, "ell", self.epsilon ** 3 / self.n ** 4)
        if self.n_prime is None:
            object.__setattr__(self, "n_prime", default_n_prime(self.n, self.epsilon))
        if self.ell <= 0 or self.n_prime <= 0:
            raise ValueError("ell and n_prime must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def default_n_prime(n: int, epsilon: float) -> float:
    return math.sqrt(n + 4.0 * math.sqrt(n * math.log(4.0 / epsilon)))


def boundary_mass_bound(params: GridParams) -> float:
    """20 n^{5/8} n' sqrt(2 l sqrt(n)), the bound on Vol(BC) for convex targets."""
    return 20.0 * params.n ** 0.625 * params.n_prime * math.sqrt(2.0 * params.ell * math.sqrt(params.n))


def truncate_labels(points, labels, n_prime: float) -> np.ndarray:
    """Force the label to 0 for every point with norm greater than ``n_prime``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels, dtype=bool)
    return labels & (np.linalg.norm(points, axis=1) <= n_prime)


def cube_bounds(index, ell: float) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(index, dtype=float) * ell
    return c - ell / 2.0, c + ell / 2.0


def cube_gaussian_mass(cube, params: GridParams) -> float:
    """Exact standard-normal mass of one cube, prod_j (Phi(b_j) - Phi(a_j))."""
    lo, hi = cube_bounds(cube, params.ell)
    return float(np.prod(ndtr(hi) - ndtr(lo)))


def cube_corners(index, ell: float) -> np.ndarray:
    lo, hi = cube_bounds(index, ell)
    return np.array(list(itertools.product(*zip(lo, hi))))


class CubeGrid:
    """All cubes meeting Ball(2 n'), stored as a mask over a box of indices."""

    def __init__(self, params: GridParams):
        self.params = params
        n, ell = params.n, params.ell
        radius = 2.0 * params.n_prime
        self.R = int(math.floor(radius / ell + 0.5))
        side = 2 * self.R + 1
        box_count = side ** n
        if box_count > params.cube_cap:
            raise GridInfeasible(
                f"grid infeasible at these parameters: {box_count} candidate cubes exceed cap {params.cube_cap}",
                box_count)
        self.shape = (side,) * n
        axis = np.arange(-self.R, self.R + 1)
        near = np.maximum(np.abs(axis) * ell - ell / 2.0, 0.0) ** 2
        dist2 = np.zeros(self.shape)
        for j in range(n):
            dist2 = dist2 + near.reshape([-1 if k == j else 1 for k in range(n)])
        self.mask = dist2 <= radius * radius
        axis_mass = ndtr(axis * ell + ell / 2.0) - ndtr(axis * ell - ell / 2.0)
        mass = np.ones(self.shape)
        for j in range(n):
            mass = mass * axis_mass.reshape([-1 if k == j else 1 for k in range(n)])
        self.mass = np.where(self.mask, mass, 0.0)
        self.indices = np.argwhere(self.mask) - self.R

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.indices)

    def locate(self, X) -> np.ndarray:
        """Box position of each point's cube, or -1 rows for points off the grid."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.floor(X / self.params.ell + 0.5).astype(np.int64) + self.R
        ok = np.all((idx >= 0) & (idx < self.shape[0]), axis=1)
        ok[ok] = self.mask[tuple(idx[ok].T)]
        idx[~ok] = -1
        return idx

    def cube_index(self, X) -> list:
        """Index tuple of the cube containing each point (None when off the grid)."""
        return [None if row[0] < 0 else tuple(int(v) - self.R for v in row) for row in self.locate(X)]

    def counts(self, X) -> np.ndarray:
        idx = self.locate(X)
        idx = idx[idx[:, 0] >= 0]
        flat = np.ravel_multi_index(tuple(idx.T), self.shape) if len(idx) else np.array([], dtype=np.int64)
        return np.bincount(flat, minlength=int(np.prod(self.shape))).reshape(self.shape)

    def min_mass(self) -> float:
        return float(self.mass[self.mask].min())

    def total_mass(self) -> float:
        return float(self.mass.sum())


def build_grid(params: GridParams) -> CubeGrid:
    return CubeGrid(params)


def default_sample_budget(grid: CubeGrid) -> int:
    """Coupon-collector budget (ln(#cubes) + 3) / min cube mass."""
    return int(math.ceil((math.log(len(grid)) + 3.0) / grid.min_mass()))


def _dilate(occupied: np.ndarray) -> np.ndarray:
    """Cubes at Chebyshev index distance <= 1 from an occupied cube (self included)."""
    n = occupied.ndim
    padded = np.pad(occupied, 1)
    out = np.zeros_like(occupied)
    size = occupied.shape
    for shift in itertools.product((0, 1, 2), repeat=n):
        out |= padded[tuple(slice(s, s + d) for s, d in zip(shift, size))]
    return out


@dataclass
class CubeClassification:
    grid: CubeGrid
    classes: np.ndarray          # dense over the index box, -1 off the grid
    occupied: np.ndarray         # any sample in the cube
    bc_mass: float
    ec_mass: float
    ic_mass: float

    def class_of(self, cube) -> str:
        pos = tuple(int(v) + self.grid.R for v in cube)
        code = int(self.classes[pos])
        if code < 0:
            raise KeyError(f"cube {cube} is not in the grid")
        return CLASS_NAMES[code]

    def cubes_of(self, code: int) -> np.ndarray:
        return np.argwhere(self.classes == code) - self.grid.R

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in idx): self.class_of(idx) for idx in self.grid.indices}

    @property
    def all_occupied(self) -> bool:
        return bool(np.all(self.occupied[self.grid.mask]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "class", "mass"])
            for idx in self.grid.indices:
                pos = tuple(idx + self.grid.R)
                w.writerow([" ".join(str(int(v)) for v in idx),
                            CLASS_NAMES[int(self.classes[pos])], repr(float(self.grid.mass[pos]))])


def classify_cubes(points, labels, params: GridParams, grid: CubeGrid | None = None) -> CubeClassification:
    """Sort cubes into external / boundary / internal from labelled samples.

    A cube with no positive sample is external.  A positive cube adjacent
    (including itself) to a cube holding a negative sample is a boundary cube,
    and every other positive cube is internal.  Samples off the grid are
    ignored.
    """
    grid = grid or build_grid(params)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels, dtype=bool)
    pos = grid.counts(points[labels]) > 0
    neg = grid.counts(points[~labels]) > 0
    near_neg = _dilate(neg)
    classes = np.full(grid.shape, -1, dtype=np.int8)
    classes[grid.mask] = EXTERNAL
    classes[grid.mask & pos & near_neg] = BOUNDARY
    classes[grid.mask & pos & ~near_neg] = INTERNAL
    m = grid.mass
    return CubeClassification(
        grid=grid, classes=classes, occupied=(pos | neg),
        bc_mass=float(m[classes == BOUNDARY].sum()),
        ec_mass=float(m[classes == EXTERNAL].sum()),
        ic_mass=float(m[classes == INTERNAL].sum()),
    )


def _hull_generators(P: np.ndarray) -> np.ndarray:
    """Vertices of Conv(P); the hull is unchanged, the LP gets smaller."""
    if len(P) <= P.shape[1] + 1:
        return P
    h = Hull(P)
    return h.vertices


def internal_cube_containment_check(points, labels, params: GridParams,
                                    grid: CubeGrid | None = None, truncate: bool = True) -> bool:
    """Whether every internal cube lies in the hull of the positive samples.

    The containment holds for targets inside Ball(n'), so by default labels
    beyond ``n_prime`` are first forced to 0; without that, a positive cube on
    the rim of the grid has no outer neighbours and can poke out of the hull.
    Raises :class:`HypothesisViolation` when some cube holds no sample.  Each
    internal cube is first tested against the positives in its adjacent cubes
    (a subset of T+, so success there is conclusive) and only falls back to
    all of T+ otherwise.
    """
    grid = grid or build_grid(params)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels, dtype=bool)
    if truncate:
        labels = truncate_labels(points, labels, params.n_prime)
    cls = classify_cubes(points, labels, params, grid)
    if not cls.all_occupied:
        empty = int(np.sum(grid.mask & ~cls.occupied))
        raise HypothesisViolation(f"{empty} cube(s) contain no sample")
    positives = points[labels]
    loc = grid.locate(positives)
    by_cube: dict[tuple, list] = {}
    for row, p in zip(map(tuple, loc), positives):
        if row[0] >= 0:
            by_cube.setdefault(row, []).append(p)
    all_gens = None
    offsets = list(itertools.product((-1, 0, 1), repeat=params.n))
    for idx in cls.cubes_of(INTERNAL):
        pos = idx + grid.R
        local = [p for off in offsets for p in by_cube.get(tuple(pos + np.array(off)), [])]
        local = _hull_generators(np.array(local))
        for corner in cube_corners(idx, params.ell):
            if in_hull(local, corner):
                continue
            if all_gens is None:
                all_gens = _hull_generators(positives)
            if not in_hull(all_gens, corner):
                return False
    return True


def generate_cover(params: GridParams, subset_cap: int = 2 ** 20, mode: str = "full",
                   grid: CubeGrid | None = None) -> list[Hull]:
    """Hulls of unions of grid cubes, deduplicated by their extreme corners.

    ``mode="full"`` walks every subset of the grid and refuses when there are
    more than ``subset_cap`` subsets.  ``mode="contiguous"`` (one dimension
    only) keeps runs of consecutive cubes, which already realise every
    distinct hull in 1D.
    """
    grid = grid or build_grid(params)
    n, ell, K = params.n, params.ell, len(grid)
    cubes = grid.indices
    empty = Hull(np.empty((0, n)), n=n)
    if mode == "contiguous":
        if n != 1:
            raise ValueError("contiguous enumeration is defined for n = 1 only")
        order = np.sort(cubes[:, 0])
        out = [empty]
        for i in range(K):
            for j in range(i, K):
                out.append(Hull([[order[i] * ell - ell / 2], [order[j] * ell + ell / 2]]))
        return out
    if mode != "full":
        raise ValueError(f"unknown cover mode {mode!r}")
    if K >= 63 or 2 ** K > subset_cap:
        count = 2 ** K if K < 4096 else -1
        raise GridInfeasible(f"cover infeasible: 2^{K} subsets exceed cap {subset_cap}", count)
    if n == 1:
        # the hull of a union of intervals runs from the lowest to the highest member
        masks = np.arange(1, 2 ** K, dtype=np.int64)
        low = np.log2(masks & -masks).astype(np.int64)
        high = np.floor(np.log2(masks.astype(float))).astype(np.int64)
        pairs = np.stack([low, high], axis=1)
        _, first = np.unique(pairs, axis=0, return_index=True)
        out = [empty]
        for i in np.sort(first):
            lo, hi = cubes[pairs[i, 0], 0], cubes[pairs[i, 1], 0]
            lo, hi = min(lo, hi), max(lo, hi)
            out.append(Hull([[lo * ell - ell / 2], [hi * ell + ell / 2]]))
        return out
    corners = [cube_corners(c, ell) for c in cubes]
    seen = {("empty",): empty}
    for mask in range(1, 2 ** K):
        members = [i for i in range(K) if mask >> i & 1]
        h = Hull(np.vstack([corners[i] for i in members]))
        seen.setdefault(h.vertex_key(), h)
    return list(seen.values())
