"""Euclidean projections used by the class bodies.

All routines operate on plain float64 arrays.  Batch variants accept a
``(k, dim)`` matrix and project every row; they are the hot path for packing
pools, so they avoid per-row Python loops where possible.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import isotonic_regression

from .errors import NoConvergence

ABS_TOL = 1e-10
MAX_ITER = 10_000


def project_l1_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Project a vector onto the l1 ball of the given radius.

    Sort-based soft-thresholding (Duchi et al. style): find the shift theta
    such that sum(max(|x|-theta, 0)) = radius and apply it with signs.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.abs(x).sum() <= radius:
        return x.copy()
    return _l1_rows(x[None, :], radius)[0]


def project_l1_ball_rows(X: np.ndarray, radius: float) -> np.ndarray:
    """Row-wise l1-ball projection of a (k, dim) matrix."""
    X = np.asarray(X, dtype=np.float64)
    inside = np.abs(X).sum(axis=1) <= radius
    out = X.copy()
    if not inside.all():
        out[~inside] = _l1_rows(X[~inside], radius)
    return out


def _l1_rows(X: np.ndarray, radius: float) -> np.ndarray:
    a = np.abs(X)
    s = np.sort(a, axis=1)[:, ::-1]
    csum = np.cumsum(s, axis=1) - radius
    idx = np.arange(1, X.shape[1] + 1)
    cond = s - csum / idx > 0
    rho = cond.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = csum[np.arange(len(X)), rho] / (rho + 1)
    return np.sign(X) * np.maximum(a - theta[:, None], 0.0)


def project_ellipsoid(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Project onto {theta : sum theta_i^2 / a_i <= 1} (a_i > 0).

    KKT gives theta_i = x_i * a_i / (a_i + lam); the multiplier solves the
    scalar decreasing equation sum x_i^2 a_i / (a_i + lam)^2 = 1 by Newton
    with a bisection safeguard.
    """
    return project_ellipsoid_rows(np.asarray(x, dtype=np.float64)[None, :], a)[0]


def project_ellipsoid_rows(X: np.ndarray, a: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    lhs = (X * X / a).sum(axis=1)
    outside = lhs > 1.0 + 1e-15
    out = X.copy()
    if not outside.any():
        return out
    Y = X[outside]
    # g(lam) = sum x^2 a / (a + lam)^2 is decreasing; bracket then bisect.
    lo = np.zeros(len(Y))
    hi = np.full(len(Y), float(a.max()))
    while True:
        g_hi = ((Y * Y) * a / (a + hi[:, None]) ** 2).sum(axis=1)
        mask = g_hi > 1.0
        if not mask.any():
            break
        hi[mask] *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = ((Y * Y) * a / (a + mid[:, None]) ** 2).sum(axis=1)
        high = g > 1.0
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
        if np.max(hi - lo) < 1e-14 * max(1.0, float(a.max())):
            break
    lam = 0.5 * (lo + hi)
    out[outside] = Y * a / (a + lam[:, None])
    return out


def isotonic_rows(X: np.ndarray) -> np.ndarray:
    """Row-wise pool-adjacent-violators (non-decreasing) projection."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        out[i] = isotonic_regression(X[i], increasing=True).x
    return out


def project_monotone_box_1d(x: np.ndarray) -> np.ndarray:
    """Exact projection onto non-decreasing vectors with entries in [0, 1].

    Clipping an isotonic regression to constant bounds preserves optimality,
    so PAVA followed by a clip is the exact projection for the 1-D chain.
    """
    return np.clip(isotonic_regression(np.asarray(x, dtype=np.float64), increasing=True).x, 0.0, 1.0)


def project_monotone_box_1d_rows(X: np.ndarray) -> np.ndarray:
    return np.clip(isotonic_rows(X), 0.0, 1.0)


def project_quad_ball(x: np.ndarray, evecs: np.ndarray, evals: np.ndarray, bound: float) -> np.ndarray:
    """Project onto {f : ||A f||_2 <= bound} given the eigensystem of A^T A.

    f = (I + lam A^T A)^{-1} x with lam >= 0 solving ||A f|| = bound when x is
    infeasible; solved in the eigenbasis by bisection on the decreasing scalar
    map lam -> sum d z^2 / (1 + lam d)^2.
    """
    return project_quad_ball_rows(np.asarray(x, dtype=np.float64)[None, :], evecs, evals, bound)[0]


def project_quad_ball_rows(X: np.ndarray, evecs: np.ndarray, evals: np.ndarray, bound: float) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    Z = X @ evecs
    val = (Z * Z * evals).sum(axis=1)
    b2 = bound * bound
    outside = val > b2 + 1e-15
    out = X.copy()
    if not outside.any():
        return out
    Zo = Z[outside]
    lo = np.zeros(len(Zo))
    hi = np.ones(len(Zo))
    while True:
        g = (Zo * Zo * evals / (1.0 + hi[:, None] * evals) ** 2).sum(axis=1)
        mask = g > b2
        if not mask.any():
            break
        hi[mask] *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = (Zo * Zo * evals / (1.0 + mid[:, None] * evals) ** 2).sum(axis=1)
        high = g > b2
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
        if np.max(hi - lo) <= 1e-13 * (1.0 + np.max(hi)):
            break
    lam = 0.5 * (lo + hi)
    Znew = Zo / (1.0 + lam[:, None] * evals)
    out[outside] = Znew @ evecs.T
    return out


def dykstra(x: np.ndarray, projectors, tol: float = ABS_TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Dykstra's alternating projection onto an intersection of convex sets.

    ``projectors`` is a sequence of callables mapping (k, dim) -> (k, dim);
    works on a batch of rows simultaneously.  Raises NoConvergence when the
    cycle-to-cycle residual stays above ``tol`` after ``max_iter`` cycles.
    """
    y = np.atleast_2d(np.asarray(x, dtype=np.float64)).copy()
    single = np.asarray(x).ndim == 1
    increments = [np.zeros_like(y) for _ in projectors]
    for _ in range(max_iter):
        prev = y.copy()
        for j, proj in enumerate(projectors):
            z = y + increments[j]
            y = proj(z)
            increments[j] = z - y
        if np.max(np.abs(y - prev)) < tol:
            return y[0] if single else y
    raise NoConvergence(f"Dykstra residual above {tol} after {max_iter} cycles")
