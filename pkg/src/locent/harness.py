"""Monte Carlo experiment runner and empirical concentration checks.

Experiments sweep a sample-size grid, run the multiscale estimator per
replicate with schedule-driven stage counts, and fit a log-log slope of mean
squared risk against n.  Seeds derive from the master seed by a splittable
counter scheme (sha256 over labels), so replicates are independent streams
and a failed replicate never perturbs the others.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bodies import (
    ConvexBody,
    DesignDistribution,
    LinearEllipsoid,
    LinearL1,
    MonotoneGrid,
    dist,
    make_body,
)
from .entropy import EntropyBudget, EntropyProfile, local_entropy
from .errors import (
    DegenerateFit,
    InsufficientData,
    PreconditionViolated,
    UnboundedClassWithoutMomentConstant,
)
from .estimator import (
    NoiseModel,
    PoolBudget,
    RateConstants,
    RegressionData,
    pairwise_test_psi,
    run_algorithm1,
    stage_schedule,
)
from .points import MetricPoint, as_coords
from .rates import RateFormula, theoretical_rate
from .seeds import derive_seed, rng_for

__version__ = "0.1.0"


# ---------------------------------------------------------------------------
# Truths and data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruthSpec:
    """How the regression truth is produced: an explicit member, a seeded
    draw, a seeded s-sparse vector on the l1 sphere, or a named function."""

    kind: str = "sampled"  # fixed | sampled | sparse | identity
    coords: tuple | None = None
    s: int = 0
    seed: int = 0


def make_truth(body: ConvexBody, spec: TruthSpec) -> MetricPoint:
    if spec.kind == "fixed":
        pt = body.point(np.asarray(spec.coords, dtype=np.float64))
        if not body.contains(pt):
            raise ValueError("fixed truth is not a class member")
        return pt
    if spec.kind == "sampled":
        return body.sample_member(rng_for(spec.seed, "truth"))
    if spec.kind == "sparse":
        if not isinstance(body, LinearL1):
            raise ValueError("sparse truth needs the l1 class")
        if not (1 <= spec.s <= body.p):
            raise ValueError("need 1 <= s <= p")
        rng = rng_for(spec.seed, "truth-sparse")
        support = rng.choice(body.p, size=spec.s, replace=False)
        signs = rng.integers(0, 2, size=spec.s) * 2.0 - 1.0
        mags = rng.dirichlet(np.ones(spec.s))
        beta = np.zeros(body.p)
        beta[support] = signs * mags * body.radius  # on the l1 sphere
        return body.point(beta)
    if spec.kind == "identity":
        if isinstance(body, MonotoneGrid):
            nodes = body.node_positions()
            return body.point(nodes.mean(axis=1))
        # other kinds: the projection of the per-node identity profile
        vals = np.linspace(0.0, 1.0, body.dim)
        return body.project(vals)
    raise ValueError(f"unknown truth kind {spec.kind!r}")


def draw_data(
    body: ConvexBody,
    design: DesignDistribution,
    noise: NoiseModel,
    truth: MetricPoint,
    n: int,
    seed: int,
) -> RegressionData:
    """One observed sample: design rows (or grid nodes) plus noisy responses."""
    rng = rng_for(seed, "data")
    if isinstance(body, (LinearL1, LinearEllipsoid)):
        X = design.sample(n, body.p, rng)
        signal = X @ truth.coords
        data = RegressionData(y=signal + noise.sample(n, rng), design_matrix=X)
    else:
        idx = rng.integers(0, body.dim, size=n)
        signal = truth.coords[idx]
        data = RegressionData(y=signal + noise.sample(n, rng), node_index=idx)
    return data


# ---------------------------------------------------------------------------
# Slope fitting
# ---------------------------------------------------------------------------


def fit_rate_slope(points) -> dict:
    """OLS of log risk on log n: slope, intercept, and slope standard error."""
    pts = [(float(n), float(r)) for n, r in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    ns = np.array([p[0] for p in pts])
    rs = np.array([p[1] for p in pts])
    if np.all(ns == ns[0]):
        raise DegenerateFit("all sample sizes equal")
    if np.any(rs <= 0):
        raise ValueError("risks must be positive for a log fit")
    x = np.log(ns)
    y = np.log(rs)
    xbar = x.mean()
    sxx = ((x - xbar) ** 2).sum()
    slope = ((x - xbar) * (y - y.mean())).sum() / sxx
    intercept = y.mean() - slope * xbar
    resid = y - (intercept + slope * x)
    dof = max(len(pts) - 2, 1)
    stderr = float(np.sqrt((resid ** 2).sum() / dof / sxx))
    return {"slope": float(slope), "intercept": float(intercept), "stderr": stderr}


# ---------------------------------------------------------------------------
# Experiment configuration and result
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    body_kind: str = "monotone_grid"
    body_params: dict = field(default_factory=dict)  # m may be "auto"
    design: DesignDistribution = DesignDistribution("gaussian")
    noise: NoiseModel = NoiseModel("gaussian", 1.0)
    truth: TruthSpec = TruthSpec("sampled")
    n_grid: tuple = (64, 128, 256, 512, 1024, 2048, 4096)
    replicates: int = 50
    C: float = 4.0
    practical_scale: float = 1.0
    b: float = 0.125
    alpha_moment: float = 1.0
    condition_kind: str = "auto"  # bounded | unbounded | adaptive | auto
    stages: int | None = None  # fixed stage count overrides the schedule
    max_stages: int = 14
    pool: PoolBudget = PoolBudget()
    profile_budget: EntropyBudget = EntropyBudget(pool_size=192, centers=4)
    risk_eval: str = "analytic"  # analytic | fresh_sample
    fresh_m: int = 0  # 0 -> 10 * max(n_grid)
    master_seed: int = 20240601
    theory: str | None = None
    theory_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates >= 1")
        if any(nxt <= prev for prev, nxt in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.truth.kind == "sparse" and "p" in self.body_params:
            if self.truth.s > int(self.body_params["p"]):
                raise ValueError("sparse truth needs s <= p")

    def digest(self) -> str:
        blob = json.dumps(_config_payload(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _config_payload(cfg: ExperimentConfig) -> dict:
    def clean(v):
        if isinstance(v, np.ndarray):
            return [float(x) for x in v]
        if isinstance(v, (np.floating, np.integer)):
            return float(v)
        if isinstance(v, dict):
            return {k: clean(x) for k, x in sorted(v.items())}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return {
        "body_kind": cfg.body_kind,
        "body_params": clean(cfg.body_params),
        "design": [cfg.design.kind, cfg.design.tau],
        "noise": [cfg.noise.kind, cfg.noise.sigma],
        "truth": [cfg.truth.kind, clean(cfg.truth.coords), cfg.truth.s, cfg.truth.seed],
        "n_grid": list(cfg.n_grid),
        "replicates": cfg.replicates,
        "C": cfg.C,
        "practical_scale": cfg.practical_scale,
        "b": cfg.b,
        "alpha_moment": cfg.alpha_moment,
        "condition_kind": cfg.condition_kind,
        "stages": cfg.stages,
        "max_stages": cfg.max_stages,
        "pool": [cfg.pool.size, cfg.pool.growth, cfg.pool.cap, cfg.pool.axis_steps,
                 cfg.pool.extreme_pulls, cfg.pool.sparsify, cfg.pool.max_axis_dims],
        "profile": [cfg.profile_budget.pool_size, cfg.profile_budget.centers],
        "risk_eval": cfg.risk_eval,
        "fresh_m": cfg.fresh_m,
        "master_seed": cfg.master_seed,
        "theory": cfg.theory,
        "theory_params": clean(cfg.theory_params),
    }


def body_for_n(cfg: ExperimentConfig, n: int) -> ConvexBody:
    """Class instance for sample size n; grid resolution m may grow with n."""
    params = dict(cfg.body_params)
    if str(params.get("m", "")).lower() == "auto":
        p = int(params.get("p", 1))
        params["m"] = int(np.ceil(n ** (1.0 / (2.0 * p))))
    return make_body(cfg.body_kind, **params)


def constants_for(cfg: ExperimentConfig, body: ConvexBody) -> RateConstants:
    if cfg.condition_kind == "adaptive" or (
        cfg.condition_kind == "auto" and body.sup_bound is None
    ):
        pass  # adaptive uses the same L as its boundedness case below
    if body.sup_bound is not None:
        return RateConstants.bounded(
            cfg.C, cfg.noise.sigma, body.sup_bound, cfg.practical_scale
        )
    return RateConstants.unbounded(
        cfg.C, cfg.noise.sigma, body.diameter(), cfg.alpha_moment, cfg.b, cfg.practical_scale
    )


def resolve_condition_kind(cfg: ExperimentConfig, body: ConvexBody) -> str:
    if cfg.condition_kind != "auto":
        return cfg.condition_kind
    return "bounded" if body.sup_bound is not None else "unbounded"


def schedule_profile(cfg: ExperimentConfig, body: ConvexBody, constants: RateConstants,
                     kind: str) -> EntropyProfile:
    """Greedy entropy profile on the geometric grid the schedule reads.

    The schedule evaluates entropy at d/2^(J-2) (twice that for the adaptive
    condition), so the grid is the geometric ladder d * 2^(2-j); arguments
    then always hit grid points exactly.
    """
    d = body.diameter()
    eps_grid = [d * 2.0 ** (2 - j) for j in range(cfg.max_stages + 3)]
    eps_grid = sorted(e for e in eps_grid if e > 0)
    seed = derive_seed(cfg.master_seed, "profile", kind, body.tag)
    if kind == "adaptive":
        # the schedule's infimum over centers is approximated by the
        # least-entropy heuristic extreme point (vertices minimize it)
        ext = body.extreme_points()
        center = ext[0] if len(ext) else body.project(np.zeros(body.dim)).coords
        return local_entropy(
            body, eps_grid, 2.0 * constants.c, mode="adaptive", center=center,
            budget=cfg.profile_budget, seed=seed,
        )
    return local_entropy(
        body, eps_grid, constants.c, mode="global", budget=cfg.profile_budget, seed=seed
    )


@dataclass
class ExperimentResult:
    config_digest: str
    n_grid: list
    risks: dict  # n -> list of per-replicate squared risks (nan = failed)
    stages: dict  # n -> stage count used
    mean_risk: dict
    std_error: dict
    slope: float | None
    intercept: float | None
    slope_stderr: float | None
    theory_values: dict
    fit_excluded: list
    master_seed: int
    version: str = __version__

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "replicate", "risk", "stages", "seed"])
        for n in self.n_grid:
            for r, risk in enumerate(self.risks[n]):
                w.writerow([n, r, repr(float(risk)), self.stages[n],
                            derive_seed(self.master_seed, "cell", n, r)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean_risk", "std_error", "count", "theory"])
        for n in self.n_grid:
            theory = self.theory_values.get(n, "")
            w.writerow([n, repr(float(self.mean_risk[n])), repr(float(self.std_error[n])),
                        int(np.sum(np.isfinite(self.risks[n]))),
                        repr(float(theory)) if theory != "" else ""])
        return buf.getvalue()

    def manifest_json(self) -> str:
        payload = {
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "version": self.version,
            "n_grid": list(self.n_grid),
            "stages": {str(k): v for k, v in self.stages.items()},
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "fit_excluded": self.fit_excluded,
            "mean_risk": {str(k): self.mean_risk[k] for k in self.n_grid},
            "std_error": {str(k): self.std_error[k] for k in self.n_grid},
            "theory": {str(k): v for k, v in self.theory_values.items()},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _run_cell(cfg: ExperimentConfig, n: int, rep: int, stages: int,
              body: ConvexBody, truth: MetricPoint, fresh_seed: int) -> float:
    """One replicate; pure function of (config, n, rep)."""
    seed = derive_seed(cfg.master_seed, "cell", n, rep)
    data = draw_data(body, cfg.design, cfg.noise, truth, n, seed)
    constants = constants_for(cfg, body)
    trace = run_algorithm1(
        body, data, constants, stages, cfg.pool, seed=derive_seed(seed, "run")
    )
    fhat = trace.final
    if cfg.risk_eval == "analytic":
        return dist(body, fhat, truth) ** 2
    m = cfg.fresh_m if cfg.fresh_m else 10 * max(cfg.n_grid)
    rng = rng_for(fresh_seed, "fresh-eval", n)
    if isinstance(body, (LinearL1, LinearEllipsoid)):
        X = cfg.design.sample(m, body.p, rng)
        diffs = X @ (fhat.coords - truth.coords)
    else:
        idx = rng.integers(0, body.dim, size=m)
        diffs = fhat.coords[idx] - truth.coords[idx]
    return float(np.mean(diffs * diffs))


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Full sweep over the n grid.

    Per n: resolve the class (grid resolution may grow with n), compute the
    entropy profile and stage schedule once, then run replicates; failures
    are recorded as NaN without aborting the sweep.
    """
    risks: dict = {}
    stages_used: dict = {}
    theory_vals: dict = {}
    formula: RateFormula | None = None
    if cfg.theory:
        formula = theoretical_rate(cfg.theory, **cfg.theory_params)

    for n in cfg.n_grid:
        body = body_for_n(cfg, n)
        truth = make_truth(body, cfg.truth)
        constants = constants_for(cfg, body)
        kind = resolve_condition_kind(cfg, body)
        if cfg.stages is not None:
            stages = cfg.stages
        else:
            profile = schedule_profile(cfg, body, constants, kind)
            sched = stage_schedule(profile, n, constants, kind, body.diameter(),
                                   max_stages=cfg.max_stages)
            stages = sched.j_star
        stages_used[n] = stages
        fresh_seed = derive_seed(cfg.master_seed, "fresh")
        cell = lambda rep: _run_cell(cfg, n, rep, stages, body, truth, fresh_seed)
        out = np.full(cfg.replicates, np.nan)
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                futures = {rep: ex.submit(_run_cell, cfg, n, rep, stages, body, truth,
                                          fresh_seed) for rep in range(cfg.replicates)}
                for rep in sorted(futures):
                    try:
                        out[rep] = futures[rep].result()
                    except Exception:
                        out[rep] = np.nan
        else:
            for rep in range(cfg.replicates):
                try:
                    out[rep] = cell(rep)
                except Exception:
                    out[rep] = np.nan
        if not np.any(np.isfinite(out)):
            raise InsufficientData(f"all replicates failed at n={n}")
        risks[n] = out
        if formula is not None:
            theory_vals[n] = float(formula.risk(n))

    mean_risk = {n: float(np.nanmean(risks[n])) for n in cfg.n_grid}
    std_error = {
        n: float(np.nanstd(risks[n], ddof=1) / np.sqrt(np.sum(np.isfinite(risks[n]))))
        for n in cfg.n_grid
    }

    # slope fit, excluding cells in the diameter^2 ceiling regime
    d2 = {n: body_for_n(cfg, n).diameter() ** 2 for n in cfg.n_grid}
    excluded = [
        int(n)
        for n in cfg.n_grid
        if mean_risk[n] + 2.0 * std_error[n] >= d2[n] or mean_risk[n] <= 0
    ]
    pts = [(n, mean_risk[n]) for n in cfg.n_grid if int(n) not in excluded]
    slope = intercept = stderr = None
    if len(pts) >= 3:
        fit = fit_rate_slope(pts)
        slope, intercept, stderr = fit["slope"], fit["intercept"], fit["stderr"]

    return ExperimentResult(
        config_digest=cfg.digest(),
        n_grid=list(cfg.n_grid),
        risks=risks,
        stages=stages_used,
        mean_risk=mean_risk,
        std_error=std_error,
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
        theory_values=theory_vals,
        fit_excluded=excluded,
        master_seed=cfg.master_seed,
    )


# ---------------------------------------------------------------------------
# Empirical concentration checks
# ---------------------------------------------------------------------------


@dataclass
class ConcentrationReport:
    frequency: float
    bound: float
    delta: float
    n: int
    C: float
    trials: int
    case: str  # bounded | unbounded

    @property
    def passed(self) -> bool:
        return self.frequency >= self.bound


def concentration_bound_bounded(delta: float, C: float, sup_bound: float) -> float:
    """Joint-event probability floor for sup-norm-bounded classes."""
    B2 = sup_bound * sup_bound
    return (
        1.0
        - np.exp(-3.0 * delta * delta / (32.0 * B2))
        - np.exp(-3.0 * delta * delta / (8.0 * B2 * (3.0 * C * C + 1.0)))
    )


def concentration_bound_unbounded(
    delta: float, C: float, diameter: float, alpha: float, b: float
) -> float:
    return 1.0 - 2.0 * np.exp(
        -b * delta * delta / (C * C * (2.0 * alpha * alpha + 1.0) ** 2 * diameter * diameter)
    )


def _pn_norms(body, design, diffs: list[np.ndarray], n: int, trials: int, rng,
              chunk: int | None = None) -> list[np.ndarray]:
    """Per-trial n*||diff||^2_{Pn} for each coordinate difference in diffs.

    The empirical squared norm times n is the plain sum of squared evaluation
    differences over the n drawn design points, for both class kinds.
    """
    if chunk is None:
        chunk = max(1, min(512, int(2e7 // max(n, 1))))
    outs = [np.empty(trials) for _ in diffs]
    done = 0
    linear = isinstance(body, (LinearL1, LinearEllipsoid))
    while done < trials:
        t = min(chunk, trials - done)
        if linear:
            X = design.sample(t * n, body.p, rng)
            for j, dvec in enumerate(diffs):
                z = (X @ dvec).reshape(t, n)
                outs[j][done : done + t] = (z * z).sum(axis=1)
        else:
            idx = rng.integers(0, body.dim, size=(t, n))
            for j, dvec in enumerate(diffs):
                z = dvec[idx]
                outs[j][done : done + t] = (z * z).sum(axis=1)
        done += t
    return outs


def check_norm_concentration(
    body: ConvexBody,
    f,
    g,
    f_bar,
    n: int,
    C: float,
    delta: float,
    trials: int = 10_000,
    seed: int = 0,
    design: DesignDistribution | None = None,
    b: float = 0.125,
    alpha: float | None = None,
) -> ConcentrationReport:
    """Monte Carlo frequency of the joint empirical-norm event versus the
    closed-form probability floor.

    Event: n||f-fbar||^2_Pn <= 2 delta^2 and n||f-g||^2_Pn >= (C^2-1) delta^2.
    Preconditions: n||f-g||^2 >= C^2 delta^2 and n||f-fbar||^2 < delta^2.
    """
    fc, gc, bc = as_coords(f), as_coords(g), as_coords(f_bar)
    if n * dist(body, fc, gc) ** 2 < C * C * delta * delta:
        raise PreconditionViolated("need n ||f-g||^2 >= C^2 delta^2")
    if n * dist(body, fc, bc) ** 2 >= delta * delta:
        raise PreconditionViolated("need n ||f-fbar||^2 < delta^2")
    if body.sup_bound is not None:
        bound = concentration_bound_bounded(delta, C, body.sup_bound)
        case = "bounded"
    else:
        if alpha is None:
            raise UnboundedClassWithoutMomentConstant(
                "unbounded class needs the moment constant alpha"
            )
        bound = concentration_bound_unbounded(delta, C, body.diameter(), alpha, b)
        case = "unbounded"
    if design is None:
        design = DesignDistribution("gaussian")
    rng = rng_for(seed, "concentration")
    close, far = _pn_norms(body, design, [(fc - bc), (fc - gc)], n, trials, rng)
    event = (close <= 2.0 * delta * delta) & (far >= (C * C - 1.0) * delta * delta)
    return ConcentrationReport(
        frequency=float(event.mean()),
        bound=float(bound),
        delta=delta,
        n=n,
        C=C,
        trials=trials,
        case=case,
    )


@dataclass
class TestErrorReport:
    freq_h0: float  # P(psi = 1) under the H0-side truth
    freq_h1: float  # P(psi = 0) under the H1-side truth
    bound: float
    delta: float
    trials: int
    noise_kind: str

    @property
    def worst(self) -> float:
        return max(self.freq_h0, self.freq_h1)

    @property
    def passed(self) -> bool:
        return self.worst <= self.bound


def check_test_error(
    body: ConvexBody,
    f,
    g,
    f_bar,
    noise: NoiseModel,
    n: int,
    constants: RateConstants,
    trials: int = 10_000,
    seed: int = 0,
    design: DesignDistribution | None = None,
) -> TestErrorReport:
    """Error frequencies of the residual-comparison test against the
    3 exp(-L delta^2) bound.

    delta is fixed by the separation: delta^2 = n ||f-g||^2 / C^2.  The
    H0-side truth is ``f_bar`` (must satisfy n||f-fbar||^2 < delta^2); the
    H1-side truth mirrors it across the pair: g + (f_bar - f), projected.
    """
    fc, gc, bc = as_coords(f), as_coords(g), as_coords(f_bar)
    C = constants.C
    sep2 = n * dist(body, fc, gc) ** 2
    delta2 = sep2 / (C * C)
    if n * dist(body, fc, bc) ** 2 >= delta2:
        raise PreconditionViolated("need n ||f-fbar||^2 < delta^2 = n||f-g||^2/C^2")
    h1_bar = body.project_rows((gc + (bc - fc))[None, :])[0]
    if n * dist(body, gc, h1_bar) ** 2 >= delta2:
        raise PreconditionViolated("mirrored H1 truth violates the proximity condition")
    bound = 3.0 * np.exp(-constants.L_paper * delta2)
    if design is None:
        design = DesignDistribution("gaussian")
    linear = isinstance(body, (LinearL1, LinearEllipsoid))

    def error_freq(truth_coords: np.ndarray, count_psi_one: bool) -> float:
        # stream keyed by the truth so swapping f and g mirrors exactly
        rng = rng_for(seed, "test-error", truth_coords)
        errors = 0
        done = 0
        chunk = max(1, min(512, int(4e6 // max(n, 1))))
        while done < trials:
            t = min(chunk, trials - done)
            if linear:
                X = design.sample(t * n, body.p, rng)
                pf = (X @ fc).reshape(t, n)
                pg = (X @ gc).reshape(t, n)
                pt = (X @ truth_coords).reshape(t, n)
            else:
                idx = rng.integers(0, body.dim, size=(t, n))
                pf, pg, pt = fc[idx], gc[idx], truth_coords[idx]
            y = pt + noise.sample((t, n), rng)
            rss_f = ((y - pf) ** 2).sum(axis=1)
            rss_g = ((y - pg) ** 2).sum(axis=1)
            psi = rss_f >= rss_g
            errors += int(psi.sum()) if count_psi_one else int((~psi).sum())
            done += t
        return errors / trials

    return TestErrorReport(
        freq_h0=error_freq(bc, count_psi_one=True),
        freq_h1=error_freq(h1_bar, count_psi_one=False),
        bound=float(bound),
        delta=float(np.sqrt(delta2)),
        trials=trials,
        noise_kind=noise.kind,
    )
