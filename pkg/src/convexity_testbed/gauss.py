"""Gaussian sampling, chi/chi-squared masses, spherical caps and the rho function.

Everything here is a pure function of its arguments.  Random draws always take
an explicit seed or :class:`numpy.random.Generator`, so independent streams can
be run side by side without sharing state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

QUAD_TOL = 1e-10
BISECT_TOL = 1e-10
BISECT_MAXITER = 200


def make_rng(seed) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` (int, SeedSequence or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    """Split ``seed`` into ``count`` independent child seed sequences."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return ss.spawn(count)


@dataclass(frozen=True)
class GaussParams:
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")


def sample_gaussian(params: GaussParams, count: int, rng=None) -> np.ndarray:
    """Draw ``count`` i.i.d. points from the standard normal on R^n.

    Returns an array of shape ``(count, n)``.  When ``rng`` is omitted the
    generator is seeded from ``params.seed``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = make_rng(params.seed if rng is None else rng)
    return rng.standard_normal((count, params.n))


def chi2_tail_bound(n: int, t: float) -> float:
    """Upper bound exp(-(3/16) n t^2) on Pr[|X - n| >= t n] for X ~ chi^2_n."""
    if not 0.0 <= t < 0.5:
        raise ValueError(f"t must lie in [0, 1/2), got {t}")
    return math.exp(-(3.0 / 16.0) * n * t * t)


def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL, max_depth: int = 60) -> float:
    """Integrate ``f`` over [a, b] by adaptive Simpson with absolute tolerance ``tol``."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    return sign * total


# --------------------------------------------------------------------------
# spherical caps


def _sin_power(n: int):
    k = n - 2
    return lambda theta: math.sin(theta) ** k


@lru_cache(maxsize=None)
def cap_normalization(n: int, tol: float = QUAD_TOL) -> float:
    """The constant a_n making cap(0) = 1/2 (only meaningful for n >= 3)."""
    half = adaptive_simpson(_sin_power(n), 0.0, 0.5 * math.pi, tol * 1e-2)
    return 1.0 / (2.0 * half)


@dataclass(frozen=True)
class CapTable:
    """Parameters for evaluating cap(t) = Pr_{x on S^{n-1}}[x_1 >= t].

    For ``n >= 3`` the value is ``a_n * int_t^1 (1 - z^2)^((n-3)/2) dz``.
    ``n == 2`` uses the closed form arccos(t)/pi when ``allow_small_n`` is set.
    """

    n: int
    quadrature_tol: float = QUAD_TOL
    allow_small_n: bool = True
    normalization: float = field(init=False)

    def __post_init__(self):
        if self.n < 2 or (self.n == 2 and not self.allow_small_n):
            raise ValueError(f"cap is undefined for n={self.n}")
        norm = 1.0 / math.pi if self.n == 2 else cap_normalization(self.n, self.quadrature_tol)
        object.__setattr__(self, "normalization", norm)

    def __call__(self, t):
        return cap(self, t)

    def to_dict(self) -> dict:
        return {"n": self.n, "normalization": self.normalization, "quadrature_tol": self.quadrature_tol}


@lru_cache(maxsize=200_000)
def _cap_value(n: int, norm: float, tol: float, t: float) -> float:
    if t >= 1.0:
        return 0.0
    if n == 2:
        return math.acos(t) / math.pi
    if n == 3:
        return 0.5 * (1.0 - t)
    # z = cos(theta) turns the integrand into sin^{n-2}, smooth up to z = 1
    upper = math.acos(t)
    return norm * adaptive_simpson(_sin_power(n), 0.0, upper, 1e-2 * tol / norm)


def cap(table: CapTable, t):
    """Fractional surface area of {x in S^{n-1}: x_1 >= t}, t in [0, 1].

    Accepts a scalar or an array of values.
    """
    if np.ndim(t):
        return np.array([cap(table, float(v)) for v in np.ravel(t)]).reshape(np.shape(t))
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"cap argument must lie in [0, 1], got {t}")
    return _cap_value(table.n, table.normalization, table.quadrature_tol, t)


def cap_upper_bound_check(n: int, t: float, table: CapTable | None = None) -> bool:
    """Whether cap(t) <= exp(-n t^2 / 2) up to quadrature tolerance."""
    table = table or CapTable(n)
    return cap(table, t) <= math.exp(-n * t * t / 2.0) + table.quadrature_tol


def solve_r(n: int, N: int, alpha: float, table: CapTable | None = None,
            tol: float = BISECT_TOL, maxiter: int = BISECT_MAXITER) -> float:
    """Find r in [0, alpha) with cap(r / alpha) = 1/N by bisection.

    cap is strictly decreasing, so a sign change on [0, 1] in u = r/alpha is
    guaranteed for N >= 2.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2 for cap(r/alpha) = 1/N to be solvable, got {N}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    table = table or CapTable(n)
    target = 1.0 / N
    lo, hi = 0.0, 1.0
    f_lo = cap(table, lo) - target
    f_hi = cap(table, hi) - target
    if f_lo < -tol or f_hi > tol:
        raise ValueError(f"no sign change for cap(u) - 1/N on [0, 1] (n={n}, N={N})")
    if abs(f_lo) <= tol:
        return 0.0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        f_mid = cap(table, mid) - target
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    u = 0.5 * (lo + hi)
    if abs(cap(table, u) - target) > tol:
        raise ValueError(f"bisection did not reach tolerance (n={n}, N={N})")
    return u * alpha


def rho(x: float, r: float, N: int, table: CapTable) -> float:
    """Probability that a point at radius ``x`` survives N random halfspaces.

    Equals (1 - cap(r/x))^N, with cap taken as 0 once r/x >= 1.
    """
    if x < 0:
        raise ValueError("radius must be non-negative")
    if x <= r:
        return 1.0
    return (1.0 - cap(table, r / x)) ** N


def rho_vec(xs, r: float, N: int, table: CapTable) -> np.ndarray:
    return np.array([rho(float(x), r, N, table) for x in np.ravel(xs)]).reshape(np.shape(xs))


# --------------------------------------------------------------------------
# radial (chi distribution) masses


def chi_density(n: int):
    """Density of ||x|| for x ~ N(0, I_n)."""
    log_c = (0.5 * n - 1.0) * math.log(2.0) + math.lgamma(0.5 * n)

    def f(x: float) -> float:
        if x <= 0.0:
            return math.exp(-log_c) if n == 1 else 0.0
        return math.exp((n - 1) * math.log(x) - 0.5 * x * x - log_c)

    return f


def _radial_cutoff(n: int) -> float:
    return math.sqrt(n) + 40.0


def gaussian_mass_of_radial_band(n: int, a: float, b: float, tol: float = QUAD_TOL) -> float:
    """Pr[a <= ||x|| <= b] for x ~ N(0, I_n), by adaptive quadrature of the chi density."""
    if a < 0 or b < a:
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
    if a == 0.0 and math.isinf(b):
        return 1.0
    f = chi_density(n)
    if math.isinf(b):
        mode = math.sqrt(max(n - 1, 0))
        if a <= mode:
            return 1.0 - adaptive_simpson(f, 0.0, a, tol)
        return adaptive_simpson(f, a, max(a, _radial_cutoff(n)), tol)
    return adaptive_simpson(f, a, b, tol)


@dataclass(frozen=True)
class LowerBoundParams:
    """Parameters of the random-polytope / shell construction.

    Defaults follow N = 2^sqrt(n), q = 2^(0.01 sqrt(n)) rounded to an integer
    >= 2, alpha = sqrt(n) - 10 clamped to at least sqrt(n)/2, and r solving
    cap(r / alpha) = 1/N.  Overrides and clamps are recorded as flags.
    """

    n: int
    N: int
    q: int
    r: float
    alpha: float
    beta: float
    alpha_clamped: bool
    N_overridden: bool
    q_overridden: bool

    @classmethod
    def build(cls, n: int, N: int | None = None, q: int | None = None) -> "LowerBoundParams":
        root = math.sqrt(n)
        N_default = max(2, int(round(2.0 ** root)))
        q_default = max(2, int(round(2.0 ** (0.01 * root))))
        raw_alpha = root - 10.0
        alpha = max(raw_alpha, 0.5 * root)
        N_val = N_default if N is None else int(N)
        q_val = q_default if q is None else int(q)
        r = solve_r(n, N_val, alpha, CapTable(n))
        return cls(n=n, N=N_val, q=q_val, r=r, alpha=alpha, beta=root + 10.0,
                   alpha_clamped=alpha != raw_alpha,
                   N_overridden=N is not None and N_val != N_default,
                   q_overridden=q is not None and q_val != q_default)

    def to_dict(self) -> dict:
        return dict(self.__dict__)
