"""Concrete convex class bodies with samplers, projections, and distances.

Four kinds are provided:

* ``LinearL1``       -- linear functionals x^T beta over an l1 ball
* ``LinearEllipsoid``-- linear functionals over an axis-aligned ellipsoid
* ``MonotoneGrid``   -- [0,1]-valued functions on a p-dim grid, coordinatewise
                        non-decreasing, uniform design on the grid nodes
* ``HolderGrid``     -- 1-D grid functions with an rms norm bound and rms
                        increment bounds gamma * h^alpha at every grid lag

Members are coordinate vectors; the L2(P_X) distance is a scaled Euclidean
norm (scale 1 for the linear kinds by isotropy of the design, 1/sqrt(#nodes)
for the grid kinds by uniformity of the design on the nodes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import projections as proj
from .errors import Degenerate, DimensionMismatch, UnboundedClassWithoutMomentConstant
from .points import Ball, MetricPoint, as_coords

MEMBERSHIP_TOL = 1e-8


class ConvexBody:
    """Shared interface of the class bodies."""

    kind: str = ""
    dim: int = 0
    metric_scale: float = 1.0
    sup_bound: float | None = None

    # -- geometry ----------------------------------------------------------

    def diameter(self) -> float:
        raise NotImplementedError

    def project_rows(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def feasible_rows(self, X: np.ndarray) -> np.ndarray:
        """Cheap member-producing map, identity on members.

        The exact Euclidean projection by default; grid kinds override with
        faster maps.  Pool construction only needs members, so it uses this
        instead of the exact projection.
        """
        return self.project_rows(X)

    def contains_coords(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def sample_rows(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def extreme_points(self) -> np.ndarray:
        """Heuristic extreme members, rows of a (k, dim) array."""
        return np.empty((0, self.dim))

    # -- wrappers ----------------------------------------------------------

    @property
    def tag(self) -> str:
        return f"{self.kind}:{self.dim}"

    def point(self, coords) -> MetricPoint:
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {coords.shape}")
        return MetricPoint(coords, self.tag)

    def project(self, x) -> MetricPoint:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {x.shape}")
        return self.point(self.project_rows(x[None, :])[0])

    def contains(self, point, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.contains_coords(as_coords(point), tol)

    def sample_member(self, seed_or_rng) -> MetricPoint:
        rng = _as_rng(seed_or_rng)
        return self.point(self.sample_rows(1, rng)[0])

    def ball(self, center, radius: float) -> Ball:
        center = center if isinstance(center, MetricPoint) else self.point(center)
        return Ball(center, float(radius))


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def dist(body: ConvexBody, f, g) -> float:
    """L2(P_X) distance between two members."""
    u, v = as_coords(f), as_coords(g)
    if u.shape != (body.dim,) or v.shape != (body.dim,):
        raise DimensionMismatch("point dimension does not match the class")
    return body.metric_scale * float(np.linalg.norm(u - v))


def dist_rows(body: ConvexBody, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Distances from each row of ``rows`` to the single vector ``x``."""
    d = rows - x[None, :]
    return body.metric_scale * np.sqrt((d * d).sum(axis=1))


def pull_into_ball(body: ConvexBody, rows: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Contract member rows toward ``center`` so they land in the ball.

    Convexity keeps the contraction inside the body, and the scaled-Euclidean
    metric makes the contraction exact in distance.  A final corrective
    shrink guarantees dist <= radius despite rounding.
    """
    d = dist_rows(body, rows, center)
    t = np.where(d > radius, np.where(d > 0, radius / np.maximum(d, 1e-300), 1.0), 1.0)
    out = center[None, :] + t[:, None] * (rows - center[None, :])
    d2 = dist_rows(body, out, center)
    bad = d2 > radius
    if bad.any():
        shrink = (radius / d2[bad]) * (1.0 - 1e-15)
        out[bad] = center[None, :] + shrink[:, None] * (out[bad] - center[None, :])
    return out


# ---------------------------------------------------------------------------
# Linear kinds
# ---------------------------------------------------------------------------


class LinearL1(ConvexBody):
    """Linear functionals over the l1 ball of a given radius in R^p."""

    kind = "linear_l1"

    def __init__(self, p: int, radius: float = 1.0):
        if p < 1 or radius <= 0:
            raise ValueError("need p >= 1 and radius > 0")
        self.p = int(p)
        self.radius = float(radius)
        self.dim = self.p
        self.metric_scale = 1.0
        self.sup_bound = None

    def diameter(self) -> float:
        return 2.0 * self.radius

    def project_rows(self, X):
        return proj.project_l1_ball_rows(X, self.radius)

    def contains_coords(self, x, tol=MEMBERSHIP_TOL):
        return bool(np.abs(x).sum() <= self.radius + tol)

    def sample_rows(self, count, rng):
        g = rng.standard_normal((count, self.p))
        scale = self.radius * (0.25 + 2.75 * rng.random(count)) / np.sqrt(self.p)
        rows = self.project_rows(g * scale[:, None])
        # blend a fraction toward random vertices so sampled pairs reach the
        # diameter; blends with members stay members
        pick = rng.random(count) < 0.3
        if pick.any():
            k = int(pick.sum())
            vert = np.zeros((k, self.p))
            vert[np.arange(k), rng.integers(0, self.p, size=k)] = (
                self.radius * (rng.integers(0, 2, size=k) * 2.0 - 1.0)
            )
            w = rng.random(k)[:, None]
            rows[pick] = (1.0 - w) * rows[pick] + w * vert
        return rows

    def extreme_points(self):
        eye = np.eye(self.p) * self.radius
        return np.vstack([eye, -eye])


class LinearEllipsoid(ConvexBody):
    """Linear functionals over {theta : sum theta_i^2 / a_i <= 1}, a ascending."""

    kind = "linear_ellipsoid"

    def __init__(self, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 1 or len(a) < 1 or np.any(a <= 0) or np.any(np.diff(a) < 0):
            raise ValueError("a must be positive and sorted ascending")
        self.a = a
        self.p = len(a)
        self.dim = self.p
        self.metric_scale = 1.0
        self.sup_bound = None

    @classmethod
    def sobolev(cls, p: int) -> "LinearEllipsoid":
        """Default Sobolev-type axis decay a_i = (p - i + 1)^(-2)."""
        i = np.arange(1, p + 1)
        return cls((p - i + 1.0) ** -2.0)

    def diameter(self) -> float:
        return 2.0 * float(np.sqrt(self.a[-1]))

    def project_rows(self, X):
        return proj.project_ellipsoid_rows(X, self.a)

    def contains_coords(self, x, tol=MEMBERSHIP_TOL):
        return bool((x * x / self.a).sum() <= 1.0 + tol)

    def sample_rows(self, count, rng):
        g = rng.standard_normal((count, self.p)) * np.sqrt(self.a)[None, :]
        scale = 0.25 + 2.75 * rng.random(count)
        rows = self.project_rows(g * scale[:, None] / np.sqrt(self.p))
        # exact radial correction: the quadratic form is homogeneous
        q = (rows * rows / self.a).sum(axis=1)
        rows *= np.minimum(1.0, 1.0 / np.sqrt(np.maximum(q, 1e-300)))[:, None]
        return rows

    def extreme_points(self):
        eye = np.eye(self.p) * np.sqrt(self.a)[None, :]
        return np.vstack([eye, -eye])


# ---------------------------------------------------------------------------
# Grid kinds
# ---------------------------------------------------------------------------


class MonotoneGrid(ConvexBody):
    """[0,1]-valued functions on an m^p grid, non-decreasing along each axis.

    Coordinates are grid values flattened in C order; the design is uniform
    on the grid nodes, so the L2(P_X) norm is the rms over nodes.
    """

    kind = "monotone_grid"

    def __init__(self, p: int, m: int):
        if p < 1 or m < 1:
            raise ValueError("need p >= 1 and m >= 1")
        self.p = int(p)
        self.m = int(m)
        self.dim = self.m ** self.p
        self.metric_scale = self.dim ** -0.5
        self.sup_bound = 1.0

    def diameter(self) -> float:
        return 1.0

    def node_positions(self) -> np.ndarray:
        """Grid node coordinates in [0,1]^p, midpoints of m bins per axis; (dim, p)."""
        axis = (2.0 * np.arange(1, self.m + 1) - 1.0) / (2.0 * self.m)
        grids = np.meshgrid(*([axis] * self.p), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def _axis_isotonic(self, X: np.ndarray, axis: int) -> np.ndarray:
        shape = (len(X),) + (self.m,) * self.p
        arr = X.reshape(shape)
        moved = np.moveaxis(arr, 1 + axis, -1)
        flat = np.ascontiguousarray(moved).reshape(-1, self.m)
        fixed = proj.isotonic_rows(flat)
        return np.moveaxis(fixed.reshape(moved.shape), -1, 1 + axis).reshape(len(X), self.dim)

    def project_rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        if self.m == 1:
            return np.clip(X, 0.0, 1.0)
        if self.p == 1:
            return proj.project_monotone_box_1d_rows(X)
        projs = [lambda Z, ax=ax: self._axis_isotonic(Z, ax) for ax in range(self.p)]
        projs.append(lambda Z: np.clip(Z, 0.0, 1.0))
        return np.atleast_2d(proj.dykstra(X, projs))

    def contains_coords(self, x, tol=MEMBERSHIP_TOL):
        if x.min() < -tol or x.max() > 1.0 + tol:
            return False
        arr = x.reshape((self.m,) * self.p)
        for ax in range(self.p):
            if self.m > 1 and np.diff(arr, axis=ax).min() < -tol:
                return False
        return True

    def _sample_monotone_1d(self, count, rng, m):
        a = rng.random(count)
        b = a + (1.0 - a) * rng.random(count)
        w = rng.standard_exponential((count, m))
        c = np.cumsum(w, axis=1)
        c /= c[:, -1:]
        return a[:, None] + (b - a)[:, None] * c

    def _feasible_sweep(self, X: np.ndarray, max_cycles: int = 50) -> np.ndarray:
        """Cheap member-producing map: alternate axis isotonics and the box
        clip until feasible.  Identity on members, so full support survives."""
        Y = X
        if self.m == 1 or self.p == 1:
            return self.project_rows(Y)
        for _ in range(max_cycles):
            for ax in range(self.p):
                Y = self._axis_isotonic(Y, ax)
            Y = np.clip(Y, 0.0, 1.0)
            if all(self.contains_coords(r) for r in Y):
                return Y
        return self.project_rows(Y)

    def feasible_rows(self, X: np.ndarray) -> np.ndarray:
        return self._feasible_sweep(np.asarray(X, dtype=np.float64))

    def sample_rows(self, count, rng):
        if self.p == 1:
            base = self._sample_monotone_1d(count, rng, self.m)
        else:
            # mixture: additive combinations of 1-D monotone profiles (fast,
            # diverse) and raw fields swept to feasibility (full support)
            n_add = count // 2
            rows = []
            if n_add:
                profiles = [self._sample_monotone_1d(n_add, rng, self.m) for _ in range(self.p)]
                total = np.zeros((n_add,) + (self.m,) * self.p)
                for ax, prof in enumerate(profiles):
                    total += prof.reshape(
                        [n_add] + [self.m if i == ax else 1 for i in range(self.p)]
                    )
                rows.append((total / self.p).reshape(n_add, self.dim))
            n_raw = count - n_add
            if n_raw:
                rows.append(self._feasible_sweep(rng.random((n_raw, self.dim))))
            base = np.vstack(rows)
        # blend a fraction toward the constant-0/1 corners for extremal
        # coverage; convex combinations with members stay in the body
        pick = rng.random(count) < 0.3
        if pick.any():
            k = int(pick.sum())
            corner = rng.integers(0, 2, size=k).astype(np.float64)
            weight = rng.random(k)
            base[pick] = (1.0 - weight[:, None]) * base[pick] + (weight * corner)[:, None]
        return base

    def extreme_points(self):
        return np.vstack([np.zeros(self.dim), np.ones(self.dim)])


class HolderGrid(ConvexBody):
    """1-D grid functions with rms norm <= gamma and rms lag-k increments
    <= gamma * (k/m)^alpha for every grid lag k, extending f by f(1) past 1."""

    kind = "holder_grid"

    def __init__(self, alpha: float, gamma: float, m: int):
        if not (0 < alpha <= 1) or gamma <= 0 or m < 1:
            raise ValueError("need alpha in (0,1], gamma > 0, m >= 1")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.m = int(m)
        self.dim = self.m
        self.metric_scale = self.m ** -0.5
        # rms <= gamma caps |f_j| at gamma * sqrt(m) on the grid
        self.sup_bound = self.gamma * np.sqrt(self.m)
        self._eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def diameter(self) -> float:
        # opposed extreme members: the constant functions +gamma and -gamma
        ext = self.extreme_points()
        return dist(self, ext[0], ext[1])

    def _lag_matrix(self, k: int) -> np.ndarray:
        A = -np.eye(self.m)
        idx = np.minimum(np.arange(self.m) + k, self.m - 1)
        A[np.arange(self.m), idx] += 1.0
        return A

    def _lag_eig(self, k: int):
        if k not in self._eig_cache:
            A = self._lag_matrix(k)
            evals, evecs = np.linalg.eigh(A.T @ A)
            self._eig_cache[k] = (evecs, np.maximum(evals, 0.0))
        return self._eig_cache[k]

    def lag_bound(self, k: int) -> float:
        """Allowed Euclidean norm of the lag-k difference vector."""
        return self.gamma * (k / self.m) ** self.alpha * np.sqrt(self.m)

    def project_rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        norm_cap = self.gamma * np.sqrt(self.m)

        def ball_proj(Z):
            n = np.linalg.norm(Z, axis=1)
            f = np.where(n > norm_cap, norm_cap / np.maximum(n, 1e-300), 1.0)
            return Z * f[:, None]

        if self.m == 1:
            return ball_proj(X)
        projs = [ball_proj]
        for k in range(1, self.m):
            evecs, evals = self._lag_eig(k)
            bound = self.lag_bound(k)
            projs.append(
                lambda Z, V=evecs, D=evals, b=bound: proj.project_quad_ball_rows(Z, V, D, b)
            )
        return np.atleast_2d(proj.dykstra(X, projs))

    def contains_coords(self, x, tol=MEMBERSHIP_TOL):
        if np.linalg.norm(x) > self.gamma * np.sqrt(self.m) + tol:
            return False
        for k in range(1, self.m):
            d = x[np.minimum(np.arange(self.m) + k, self.m - 1)] - x
            if np.linalg.norm(d) > self.lag_bound(k) + tol:
                return False
        return True

    def feasible_rows(self, X: np.ndarray) -> np.ndarray:
        """Radial map into the body: every constraint is a homogeneous norm
        bound, so scaling by the worst bound/value ratio is exactly feasible
        and the identity on members."""
        X = np.asarray(X, dtype=np.float64)
        t = self.gamma * np.sqrt(self.m) / np.maximum(np.linalg.norm(X, axis=1), 1e-300)
        for k in range(1, self.m):
            d = X[:, np.minimum(np.arange(self.m) + k, self.m - 1)] - X
            t = np.minimum(t, self.lag_bound(k) / np.maximum(np.linalg.norm(d, axis=1), 1e-300))
        return X * np.minimum(t, 1.0)[:, None]

    def sample_rows(self, count, rng):
        # constant level plus a fluctuation scaled into the increment
        # constraints; increments ignore the constant, so diversity survives
        g = rng.standard_normal((count, self.m))
        walk = np.cumsum(g, axis=1) / np.sqrt(self.m)
        mix = rng.random(count)[:, None]
        fluct = mix * g + (1.0 - mix) * walk
        fluct -= fluct.mean(axis=1, keepdims=True)
        t = np.full(count, np.inf)
        for k in range(1, self.m):
            d = fluct[:, np.minimum(np.arange(self.m) + k, self.m - 1)] - fluct
            t = np.minimum(t, self.lag_bound(k) / np.maximum(np.linalg.norm(d, axis=1), 1e-300))
        fluct *= (t * rng.random(count))[:, None]
        level = self.gamma * rng.uniform(-1.0, 1.0, size=count)
        rows = level[:, None] + fluct
        # blend a fraction toward the +/- gamma constants for extremal coverage
        pick = rng.random(count) < 0.3
        if pick.any():
            k = int(pick.sum())
            corner = self.gamma * (rng.integers(0, 2, size=k) * 2.0 - 1.0)
            weight = rng.random(k)
            rows[pick] = (1.0 - weight[:, None]) * rows[pick] + (weight * corner)[:, None]
        # the norm cap is homogeneous, so one radial scale finishes the job
        n = np.linalg.norm(rows, axis=1)
        cap = self.gamma * np.sqrt(self.m)
        rows *= np.minimum(1.0, cap / np.maximum(n, 1e-300))[:, None]
        return rows

    def extreme_points(self):
        ones = np.ones(self.dim)
        return np.vstack([self.gamma * ones, -self.gamma * ones])


# ---------------------------------------------------------------------------
# Design distributions for linear classes
# ---------------------------------------------------------------------------

_DESIGN_TAUS = {"gaussian": 1.0, "rademacher": 1.0, "uniform_cube": np.sqrt(3.0)}


@dataclass(frozen=True)
class DesignDistribution:
    """Isotropic design for linear classes: mean zero, identity second moment."""

    kind: str = "gaussian"
    tau: float = None  # sub-Gaussian variance proxy

    def __post_init__(self):
        if self.kind not in _DESIGN_TAUS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.tau is None:
            object.__setattr__(self, "tau", _DESIGN_TAUS[self.kind])

    def sample(self, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal((n, p))
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=(n, p)).astype(np.float64) * 2.0 - 1.0
        root3 = np.sqrt(3.0)
        return rng.uniform(-root3, root3, size=(n, p))


# ---------------------------------------------------------------------------
# Sub-Gaussian moment-ratio check (Eq.-style L_p vs sqrt(p) L_2 comparison)
# ---------------------------------------------------------------------------


@dataclass
class MomentReport:
    alpha_hat: float
    per_p: dict
    pairs: int
    trials: int

    def passed(self, cap: float) -> bool:
        return self.alpha_hat <= cap


def moment_ratio_check(
    body: ConvexBody,
    design: DesignDistribution,
    p_values=(2, 4, 6),
    trials: int = 100_000,
    seed: int = 0,
    pairs: int = 8,
) -> MomentReport:
    """Monte Carlo worst ratio ||f-g||_{Lp} / (sqrt(p) ||f-g||_{L2}) over
    sampled member pairs of a linear class."""
    if not isinstance(body, (LinearL1, LinearEllipsoid)):
        raise ValueError("moment check targets the sup-norm-unbounded (linear) kinds")
    rng = np.random.default_rng(seed)
    X = design.sample(trials, body.p, rng)
    per_p = {int(q): 0.0 for q in p_values}
    used = 0
    worst = 0.0
    for _ in range(pairs):
        b1 = body.sample_rows(1, rng)[0]
        b2 = body.sample_rows(1, rng)[0]
        delta = b1 - b2
        l2 = np.linalg.norm(delta)
        if l2 < 1e-12:
            raise Degenerate("sampled pair coincides")
        z = np.abs(X @ delta)
        used += 1
        for q in per_p:
            lp = float(np.mean(z ** q) ** (1.0 / q))
            ratio = lp / (np.sqrt(q) * l2)
            per_p[q] = max(per_p[q], ratio)
            worst = max(worst, ratio)
    return MomentReport(alpha_hat=worst, per_p=per_p, pairs=used, trials=trials)


# ---------------------------------------------------------------------------
# Construction from a parsed class spec
# ---------------------------------------------------------------------------


def make_body(kind: str, **params) -> ConvexBody:
    kind = kind.lower()
    if kind in ("linear_l1", "l1"):
        return LinearL1(p=int(params["p"]), radius=float(params.get("radius", 1.0)))
    if kind in ("linear_ellipsoid", "ellipsoid"):
        if "a" in params and params["a"] is not None:
            return LinearEllipsoid(params["a"])
        return LinearEllipsoid.sobolev(int(params["p"]))
    if kind in ("monotone_grid", "monotone"):
        return MonotoneGrid(p=int(params["p"]), m=int(params["m"]))
    if kind in ("holder_grid", "holder"):
        return HolderGrid(
            alpha=float(params["alpha"]),
            gamma=float(params.get("gamma", 1.0)),
            m=int(params["m"]),
        )
    raise ValueError(f"unknown class kind {kind!r}")
