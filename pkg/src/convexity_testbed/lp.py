"""Phase-1 simplex for convex-hull membership.

Deciding whether ``x`` lies in the hull of generators ``g_1..g_m`` is the
feasibility question: is there a lambda >= 0 with sum(lambda) = 1 and
sum(lambda_j g_j) = x?  We minimise the total artificial slack with a dense
tableau and Bland's pivot rule, so the method cannot cycle.  The same routine
runs on ``Fraction`` entries for an exact re-solve when the float residual
lands too close to the tolerance.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

LP_TOL = 1e-9


def _phase_one(A, b, tol, zero, max_pivots=10_000):
    """Minimise sum of artificials for A lam + a = b, lam, a >= 0 (b >= 0).

    Returns the lambda vector at the optimum.  ``A`` and ``b`` may be float
    arrays or object arrays of Fractions (then ``tol`` should be 0).
    """
    rows, cols = A.shape
    T = np.empty((rows + 1, cols + rows + 1), dtype=A.dtype)
    T[:rows, :cols] = A
    T[:rows, cols:cols + rows] = zero
    for i in range(rows):
        T[i, cols + i] = zero + 1
    T[:rows, -1] = b
    # reduced costs of the phase-1 objective with the artificial basis
    T[rows, :] = zero
    T[rows, :cols] = -A.sum(axis=0)
    T[rows, -1] = -b.sum()
    basis = list(range(cols, cols + rows))

    for _ in range(max_pivots):
        red = T[rows, :cols + rows]
        entering = -1
        for j in range(cols + rows):
            if red[j] < -tol:
                entering = j
                break
        if entering < 0:
            break
        column = T[:rows, entering]
        leave, best = -1, None
        for i in range(rows):
            if column[i] > tol:
                ratio = T[i, -1] / column[i]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            # unbounded direction cannot occur for a phase-1 problem
            break
        T[leave, :] = T[leave, :] / T[leave, entering]
        for i in range(rows + 1):
            if i != leave and T[i, entering] != 0:
                T[i, :] = T[i, :] - T[i, entering] * T[leave, :]
        basis[leave] = entering
    else:
        raise RuntimeError("simplex pivot limit reached")

    lam = np.empty(cols, dtype=A.dtype)
    lam[:] = zero
    for i, var in enumerate(basis):
        if var < cols:
            lam[var] = T[i, -1]
    return lam


def _system(generators, point, dtype=float):
    G = np.asarray(generators, dtype=dtype)
    x = np.asarray(point, dtype=dtype)
    one = 1.0 if dtype is float else Fraction(1)
    A = np.vstack([G.T, np.full((1, G.shape[0]), one, dtype=G.dtype)])
    b = np.concatenate([x, np.array([one], dtype=G.dtype)])
    neg = b < 0
    A[neg] = -A[neg]
    b[neg] = -b[neg]
    return A, b


def hull_weights(generators, point, exact: bool = False):
    """Convex weights minimising the L1 equality residual, plus the inf-norm residual."""
    generators = np.atleast_2d(np.asarray(generators, dtype=float))
    point = np.asarray(point, dtype=float)
    if exact:
        Gq = np.array([[Fraction(v) for v in row] for row in generators], dtype=object)
        xq = np.array([Fraction(v) for v in point], dtype=object)
        A, b = _system(Gq, xq, dtype=object)
        lam = _phase_one(A, b, tol=0, zero=Fraction(0))
        resid_vec = Gq.T.dot(lam) - xq if len(xq) else np.array([], dtype=object)
        resid = max([abs(v) for v in resid_vec] + [abs(sum(lam) - 1)])
        return np.array([float(v) for v in lam]), float(resid)
    A, b = _system(generators, point)
    lam = _phase_one(A, b, tol=1e-12, zero=0.0)
    resid = max(np.max(np.abs(generators.T @ lam - point), initial=0.0), abs(lam.sum() - 1.0))
    return lam, float(resid)


def in_hull(generators, point, lp_tol: float = LP_TOL) -> bool:
    """Whether ``point`` lies in the convex hull of the rows of ``generators``.

    A float solve decides clear cases; residuals within a factor of ten of
    ``lp_tol`` are re-solved in exact rational arithmetic.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    x = np.asarray(point, dtype=float)
    if G.shape[0] == 0:
        return False
    if G.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: generators in R^{G.shape[1]}, point in R^{x.shape[0]}")
    if np.any(x < G.min(axis=0) - lp_tol) or np.any(x > G.max(axis=0) + lp_tol):
        return False
    if np.any(np.max(np.abs(G - x), axis=1) <= lp_tol):
        return True
    _, resid = hull_weights(G, x)
    if lp_tol / 10.0 < resid < 10.0 * lp_tol:
        _, resid = hull_weights(G, x, exact=True)
    return resid <= lp_tol
