"""Iterative multiscale packing estimator and its stage schedules.

The estimator starts at a deterministic anchor, and at stage k builds a
pool-maximal packing of the ball B(current, d/2^(k-1)) intersected with the
class at separation d/(2^k (C+1)), then moves to the least-squares minimizer
over the packing.  The packing randomness is a pure function of (run seed,
stage, current-center hash), which realizes a data-independent packing tree
lazily: only the traversed path is materialized.

Stage counts come from schedules: the maximal J with

    n eps_J^2 > 2 log M_loc(eps_J c / sqrt(L), c)  or  log 2

for eps_J = d sqrt(L) / (2^(J-2) c), with L the bounded-case exponent
constant, its unbounded-case variant, or the adaptive variant that reads an
adaptive entropy profile at argument 2 eps_J c / sqrt(L) with constant 2c.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bodies import ConvexBody, dist, dist_rows, pull_into_ball
from .entropy import EntropyProfile
from .errors import (
    DataDimensionMismatch,
    EmptyPacking,
    IdenticalHypotheses,
    ProfileTooCoarse,
)
from .packing import greedy_max_packing
from .points import Ball, MetricPoint, as_coords
from .seeds import derive_seed

LOG2 = float(np.log(2.0))


# ---------------------------------------------------------------------------
# Noise and constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Mean-zero noise, sub-Gaussian with variance proxy sigma."""

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "scaled_rademacher", "uniform_bounded"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal(size)
        if self.kind == "scaled_rademacher":
            return self.sigma * (rng.integers(0, 2, size=size) * 2.0 - 1.0)
        # uniform on [-sigma, sigma]: proxy sigma by Hoeffding
        return rng.uniform(-self.sigma, self.sigma, size=size)


def exponent_constant_bounded(C: float, sigma: float, sup_bound: float) -> float:
    """L(C, sigma, B_F): the triple minimum controlling the test error."""
    if C <= 3:
        raise ValueError("need C > 3")
    first = (np.sqrt(C * C - 1.0) - 2.0 * np.sqrt(2.0)) ** 2 / (8.0 * sigma * sigma)
    second = 3.0 / (64.0 * sup_bound * sup_bound)
    third = 3.0 / (16.0 * sup_bound * sup_bound * (3.0 * C * C + 1.0))
    return float(min(first, second, third))


def exponent_constant_unbounded(
    C: float, sigma: float, diameter: float, alpha: float, b: float = 0.125
) -> float:
    """L~(C, sigma): the double minimum for sup-norm-unbounded classes."""
    if C <= 3:
        raise ValueError("need C > 3")
    first = (np.sqrt(C * C - 1.0) - 2.0 * np.sqrt(2.0)) ** 2 / (8.0 * sigma * sigma)
    second = b / (C * C * (2.0 * alpha * alpha + 1.0) ** 2 * diameter * diameter)
    return float(min(first, second))


@dataclass(frozen=True)
class RateConstants:
    """Universal constant C > 3, entropy constant c = 2(C+1), exponent L.

    ``practical_scale`` rescales L for desk-scale experiments; schedule-logic
    tests use the paper-exact constants (practical_scale = 1).
    """

    C: float
    L_paper: float
    kind: str  # "bounded" | "unbounded"
    sigma: float
    practical_scale: float = 1.0
    b: float | None = None
    alpha: float | None = None
    sup_bound: float | None = None

    def __post_init__(self):
        if self.C <= 3:
            raise ValueError("need C > 3")
        if self.L_paper <= 0:
            raise ValueError("need L > 0")

    @property
    def c(self) -> float:
        return 2.0 * (self.C + 1.0)

    @property
    def L(self) -> float:
        return self.L_paper * self.practical_scale

    @classmethod
    def bounded(cls, C: float, sigma: float, sup_bound: float, practical_scale: float = 1.0):
        return cls(
            C=C,
            L_paper=exponent_constant_bounded(C, sigma, sup_bound),
            kind="bounded",
            sigma=sigma,
            practical_scale=practical_scale,
            sup_bound=sup_bound,
        )

    @classmethod
    def unbounded(
        cls,
        C: float,
        sigma: float,
        diameter: float,
        alpha: float = 1.0,
        b: float = 0.125,
        practical_scale: float = 1.0,
    ):
        return cls(
            C=C,
            L_paper=exponent_constant_unbounded(C, sigma, diameter, alpha, b),
            kind="unbounded",
            sigma=sigma,
            practical_scale=practical_scale,
            b=b,
            alpha=alpha,
        )


# ---------------------------------------------------------------------------
# Regression data
# ---------------------------------------------------------------------------


@dataclass
class RegressionData:
    """Observed (X, Y): design matrix for linear kinds, node indices for grids."""

    y: np.ndarray
    design_matrix: np.ndarray | None = None
    node_index: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if (self.design_matrix is None) == (self.node_index is None):
            raise DataDimensionMismatch("provide exactly one of design_matrix / node_index")
        if self.design_matrix is not None:
            self.design_matrix = np.asarray(self.design_matrix, dtype=np.float64)
            if self.design_matrix.shape[0] != len(self.y):
                raise DataDimensionMismatch("design rows != responses")
        else:
            self.node_index = np.asarray(self.node_index, dtype=np.int64)
            if self.node_index.shape[0] != len(self.y):
                raise DataDimensionMismatch("node indices != responses")

    @property
    def n(self) -> int:
        return len(self.y)

    def check_body(self, body: ConvexBody):
        if self.design_matrix is not None:
            if self.design_matrix.shape[1] != body.dim:
                raise DataDimensionMismatch("design width != class dimension")
        elif self.node_index.max(initial=-1) >= body.dim or self.node_index.min(initial=0) < 0:
            raise DataDimensionMismatch("node index outside the grid")

    def predictions(self, coords_rows: np.ndarray) -> np.ndarray:
        """(k, n) predicted responses for k member coordinate rows."""
        coords_rows = np.atleast_2d(coords_rows)
        if self.design_matrix is not None:
            return coords_rows @ self.design_matrix.T
        return coords_rows[:, self.node_index]

    def _stats(self):
        # sufficient statistics make the residual scan O(k dim^2) instead of
        # O(k n dim); exact, not an approximation
        if not hasattr(self, "_cached_stats"):
            yty = float(self.y @ self.y)
            if self.design_matrix is not None:
                xty = self.design_matrix.T @ self.y
                gram = self.design_matrix.T @ self.design_matrix
                self._cached_stats = ("linear", yty, xty, gram)
            else:
                dim = int(self.node_index.max()) + 1
                counts = np.bincount(self.node_index, minlength=dim).astype(np.float64)
                ysum = np.bincount(self.node_index, weights=self.y, minlength=dim)
                self._cached_stats = ("nodes", yty, ysum, counts)
        return self._cached_stats

    def rss(self, coords_rows: np.ndarray) -> np.ndarray:
        coords_rows = np.atleast_2d(coords_rows)
        kind, yty, first, second = self._stats()
        if kind == "linear":
            cross = coords_rows @ first
            quad = np.einsum("ij,ij->i", coords_rows @ second, coords_rows)
        else:
            k = len(first)
            rows = coords_rows[:, :k]
            cross = rows @ first
            quad = (rows * rows) @ second
        return np.maximum(yty - 2.0 * cross + quad, 0.0)


# ---------------------------------------------------------------------------
# Pool budgets and structured candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoolBudget:
    """Per-stage candidate budget for packing pools."""

    size: int = 256
    growth: float = 1.0  # pool size multiplier per stage
    cap: int = 4096
    axis_steps: bool = True
    extreme_pulls: bool = True
    sparsify: bool = True
    support_moves: int = 64  # seeded moves in the span of the largest coords
    max_axis_dims: int = 128

    def stage_size(self, k: int) -> int:
        return int(min(self.cap, round(self.size * self.growth ** (k - 1))))


def structured_candidates(
    body: ConvexBody,
    center: np.ndarray,
    radius: float,
    budget: PoolBudget,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pool extras: extreme pulls and blends, axis steps, sparsified centers,
    and support-subspace refinement moves.

    Pure function of (body, center, radius) and the supplied generator, which
    the estimator derives from (run seed, stage, center hash); contraction
    into the ball happens inside the pool builder.
    """
    rows = []
    if budget.extreme_pulls:
        ext = body.extreme_points()
        if len(ext):
            rows.append(ext)
            # vertex blends at several step scales, including small away
            # steps; projection restores feasibility for the away direction
            diff = ext - center[None, :]
            norms = np.maximum(dist_rows(body, ext, center), 1e-300)
            for t in (0.5, 0.25):
                frac = np.minimum(t * radius / norms, 1.0)
                rows.append(center[None, :] + frac[:, None] * diff)
            away = center[None, :] - (0.125 * radius / norms)[:, None] * diff
            rows.append(body.project_rows(away))
    if budget.axis_steps and body.dim <= budget.max_axis_dims:
        coord_step = radius / body.metric_scale
        eye = np.eye(body.dim)
        for s in (coord_step, 0.5 * coord_step):
            bumps = np.vstack([center[None, :] + s * eye, center[None, :] - s * eye])
            rows.append(body.feasible_rows(bumps))
    if budget.sparsify:
        k = 1
        while k < body.dim:
            thr = np.partition(np.abs(center), body.dim - k)[body.dim - k]
            sparse = np.where(np.abs(center) >= thr, center, 0.0)
            rows.append(body.feasible_rows(sparse[None, :]))
            k *= 2
    if budget.support_moves > 0 and rng is not None and body.dim > 2:
        k = min(16, body.dim)
        top = np.argsort(-np.abs(center), kind="stable")[:k]
        u = np.zeros((budget.support_moves, body.dim))
        u[:, top] = rng.standard_normal((budget.support_moves, k))
        u /= np.maximum(np.linalg.norm(u, axis=1, keepdims=True), 1e-300)
        coord_r = radius / body.metric_scale
        steps = np.vstack([
            center[None, :] + coord_r * u,
            center[None, :] + 0.5 * coord_r * u,
        ])
        rows.append(body.feasible_rows(steps))
    if not rows:
        return np.empty((0, body.dim))
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


@dataclass
class EstimatorTrace:
    """The iterate sequence with per-stage radii, packing sizes, and choices."""

    upsilon: list[MetricPoint]
    radii: list[float]
    packing_sizes: list[int]
    chosen_indices: list[int]
    diameter: float
    truth_distances: list[float] | None = None

    @property
    def total_stages(self) -> int:
        return len(self.upsilon)

    @property
    def final(self) -> MetricPoint:
        return self.upsilon[-1]

    def validate_cauchy(self, body: ConvexBody, rtol: float = 1e-9):
        """Consecutive moves bounded by the stage radius and, for j < k,
        dist(Y_j, Y_k) <= d / 2^(j-2)."""
        d = self.diameter
        for j in range(len(self.upsilon) - 1):
            step = dist(body, self.upsilon[j], self.upsilon[j + 1])
            if step > self.radii[j] * (1.0 + rtol):
                raise AssertionError(f"stage {j + 1} moved {step} > radius {self.radii[j]}")
        for j in range(len(self.upsilon)):
            for k in range(j + 1, len(self.upsilon)):
                bound = d / 2.0 ** (j - 1)  # = d / 2^((j+1)-2) with 1-based j+1
                gap = dist(body, self.upsilon[j], self.upsilon[k])
                if gap > bound * (1.0 + rtol):
                    raise AssertionError(f"Cauchy violation: |Y{j + 1}-Y{k + 1}| = {gap} > {bound}")

    def to_json(self) -> str:
        payload = {
            "total_stages": self.total_stages,
            "diameter": self.diameter,
            "radii": [float(r) for r in self.radii],
            "packing_sizes": list(self.packing_sizes),
            "chosen_indices": list(self.chosen_indices),
            "final_coords": [float(v) for v in self.final.coords],
        }
        if self.truth_distances is not None:
            payload["truth_distances"] = [float(t) for t in self.truth_distances]
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Algorithm 1
# ---------------------------------------------------------------------------


def run_algorithm1(
    body: ConvexBody,
    data: RegressionData,
    constants: RateConstants,
    stages: int,
    pool_budget: PoolBudget = PoolBudget(),
    seed: int = 0,
    truth_injection: MetricPoint | None = None,
    eval_truth: MetricPoint | None = None,
) -> EstimatorTrace:
    """Run the multiscale packing + least-squares selection estimator.

    ``stages`` is the trace length J: the anchor plus J-1 packing stages.
    ``truth_injection`` (oracle-validation only) adds the pull of the truth
    toward the current center into every pool; ``eval_truth`` only records
    per-stage distances and never influences the run.
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    if data.n < 1:
        raise ValueError("need at least one observation")
    data.check_body(body)
    d = body.diameter()
    C = constants.C

    anchor = body.project(np.zeros(body.dim))
    ups = [anchor]
    radii: list[float] = []
    sizes: list[int] = []
    chosen: list[int] = []
    cur = anchor.coords

    for k in range(1, stages):
        radius = d / 2.0 ** (k - 1)
        separation = d / (2.0 ** k * (C + 1.0))
        pseed = derive_seed(seed, "stage", k, cur)
        extras = structured_candidates(
            body, cur, radius, pool_budget,
            rng=np.random.default_rng(derive_seed(pseed, "structured")),
        )
        if truth_injection is not None:
            pulled = pull_into_ball(body, truth_injection.coords[None, :], cur, radius)
            extras = np.vstack([extras, pulled]) if len(extras) else pulled
        packing = greedy_max_packing(
            body,
            Ball(body.point(cur), radius),
            separation,
            pseed,
            pool_budget.stage_size(k),
            extra_candidates=extras if len(extras) else None,
        )
        if len(packing) == 0:
            raise EmptyPacking(f"stage {k} produced no centers")
        rows = packing.centers_array
        rss = data.rss(rows)
        best = float(rss.min())
        ties = np.flatnonzero(rss == best)
        if len(ties) > 1:
            ties = sorted(ties, key=lambda i: tuple(rows[i]))
        pick = int(ties[0])
        cur = rows[pick]
        ups.append(packing.centers[pick])
        radii.append(radius)
        sizes.append(len(packing))
        chosen.append(pick)

    truth_d = None
    if eval_truth is not None:
        truth_d = [dist(body, u, eval_truth) for u in ups]
    trace = EstimatorTrace(
        upsilon=ups,
        radii=radii,
        packing_sizes=sizes,
        chosen_indices=chosen,
        diameter=d,
        truth_distances=truth_d,
    )
    trace.validate_cauchy(body)
    return trace


# ---------------------------------------------------------------------------
# Stage schedules
# ---------------------------------------------------------------------------


@dataclass
class StageSchedule:
    """eps_J ladder and the maximal J satisfying the stage condition."""

    eps_j: np.ndarray
    j_star: int
    condition_kind: str
    L: float
    diameter: float

    def __post_init__(self):
        if self.j_star < 1:
            raise ValueError("J* must be at least 1")


def stage_schedule(
    profile: EntropyProfile,
    n: int,
    constants: RateConstants,
    kind: str,
    diameter: float,
    max_stages: int = 200,
) -> StageSchedule:
    """Maximal J with n eps_J^2 > 2 log M(arg_J) or log 2.

    kind "bounded"/"unbounded" reads a global profile at arg = d / 2^(J-2)
    (equal to eps_J c / sqrt(L)); kind "adaptive" reads an adaptive profile
    with constant 2c at arg = 2 eps_J c / sqrt(L).  J* = 1 when even J = 1
    fails.  Profile values are interpolated; an argument below half the
    smallest grid eps raises ProfileTooCoarse.
    """
    if kind not in ("bounded", "unbounded", "adaptive"):
        raise ValueError(f"unknown condition kind {kind!r}")
    L = constants.L
    c = constants.c
    d = float(diameter)
    sqrtL = np.sqrt(L)

    def eps_at(J: int) -> float:
        return d * sqrtL / (2.0 ** (J - 2) * c)

    def entropy_arg(J: int) -> float:
        base = eps_at(J) * c / sqrtL  # = d / 2^(J-2)
        return 2.0 * base if kind == "adaptive" else base

    def holds(J: int) -> bool:
        arg = entropy_arg(J)
        if arg < profile.eps[0] / 2.0:
            raise ProfileTooCoarse(
                f"entropy argument {arg} below half the smallest grid eps {profile.eps[0]}"
            )
        eps = eps_at(J)
        return n * eps * eps > max(2.0 * profile.value(arg), LOG2)

    j_star = 1
    eps_list = [eps_at(1)]
    if holds(1):
        for J in range(2, max_stages + 1):
            if not holds(J):
                break
            j_star = J
            eps_list.append(eps_at(J))
        else:
            j_star = max_stages
    return StageSchedule(
        eps_j=np.array(eps_list[:j_star]),
        j_star=j_star,
        condition_kind=kind,
        L=L,
        diameter=d,
    )


# ---------------------------------------------------------------------------
# Pairwise test psi
# ---------------------------------------------------------------------------


def pairwise_test_psi(body: ConvexBody, f, g, data: RegressionData) -> bool:
    """psi(Y) = 1 iff the residual sum of squares at f is >= that at g."""
    fc, gc = as_coords(f), as_coords(g)
    if dist(body, fc, gc) == 0.0:
        raise IdenticalHypotheses("test needs two distinct hypotheses")
    rss = data.rss(np.vstack([fc, gc]))
    return bool(rss[0] >= rss[1])
