"""Monte-Carlo studies: data generators for the three benchmark frontier
shapes with Gamma end-point errors, the table metrics protocol (mean
bandwidth, scaled bias/variance/MSE at a point), the smoothed-versus-naive
comparison and empirical convergence-rate checks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gamma as gamma_fn

from .auxiliary import kde_density, local_cubic_second_derivative
from .errors import (
    DegenerateDenominator,
    DegenerateSpacings,
    EmptyWindow,
    NumericalFailure,
    SingularDesign,
)
from .estimators import (
    Dataset,
    EstimatorConfig,
    _weighted_local_linear,
    estimate_naive,
    estimate_tilde_a,
    residuals,
    tilde_values_at,
)
from . import _accel
from .kernels import Kernel, biquadratic_kernel, full_ball, quadrature_grid
from .limits import LimitContext, bandwidth_local, rho0_search
from .tail import hill_estimate, select_r

MODEL_A0 = {1: (0.25, 0.5), 2: (1.0, 2.0), 3: (0.25, 0.5)}
TABLE_C = (0.5, 1.0, 1.5)
DEFAULT_SEED = 20090315


def model_frontier(model_id: int, a0: float, x) -> np.ndarray | float:
    """The benchmark frontier shapes on [0, 1]: a shifted cubic, a Gaussian
    bump and a cosine arc."""
    x = np.asarray(x, dtype=float)
    if model_id == 1:
        out = 10.0 * (x - a0) ** 3
    elif model_id == 2:
        out = np.exp(-a0 * x**2)
    elif model_id == 3:
        out = a0 * np.cos(np.pi * x)
    else:
        raise ValueError(f"unknown model id {model_id}")
    return float(out) if out.ndim == 0 else out


def model_curvature(model_id: int, a0: float, x: float) -> float:
    """Exact second derivative of the benchmark frontiers (used by oracle
    variants of the selector)."""
    if model_id == 1:
        return 60.0 * (x - a0)
    if model_id == 2:
        return (4.0 * a0**2 * x**2 - 2.0 * a0) * math.exp(-a0 * x**2)
    if model_id == 3:
        return -a0 * math.pi**2 * math.cos(math.pi * x)
    raise ValueError(f"unknown model id {model_id}")


def scale_function(x) -> np.ndarray | float:
    """Error scale s(x) = 1 + 2x used throughout the studies."""
    return 1.0 + 2.0 * np.asarray(x, dtype=float)


def gamma_tail_constant(c: float, x: float) -> float:
    """Tail constant implied by a Gamma(c, s(x)) error: 1/(c s^c Gamma(c))."""
    s = float(scale_function(x))
    return 1.0 / (c * s**c * gamma_fn(c))


def sample_gamma_error(c: float, scale: float, rng: np.random.Generator) -> float:
    """One Gamma(shape c, scale) draw; the generator's sampler is exact for
    shapes below one as well (verified distributionally in the tests)."""
    if c <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    return float(rng.gamma(c, scale))


@dataclass(frozen=True)
class SimScenario:
    """One study cell: frontier model and amplitude, Gamma tail exponent,
    sample size, evaluation point, replication count and master seed."""

    model_id: int
    a0: float
    c: float
    n: int
    x_eval: float = 0.5
    reps: int = 100
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.model_id not in (1, 2, 3):
            raise ValueError("model_id must be 1, 2 or 3")
        if self.c <= 0:
            raise ValueError("tail exponent must be positive")
        if self.n < 50:
            raise ValueError("sample size below 50 is not supported")
        if self.reps < 1:
            raise ValueError("at least one replication is required")

    def truth(self) -> float:
        return float(model_frontier(self.model_id, self.a0, self.x_eval))


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Replication substream: derived from (seed, rep) so serial and
    parallel runs agree bit for bit."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))


def generate_dataset(sc: SimScenario, rng: np.random.Generator) -> Dataset:
    """Uniform design on [0, 1]; responses are the frontier plus a
    Gamma(c, 1 + 2x) disturbance (so every response sits on or above it)."""
    X = rng.uniform(0.0, 1.0, sc.n)
    eps = rng.gamma(sc.c, scale_function(X))
    Y = model_frontier(sc.model_id, sc.a0, X) + eps
    return Dataset(X[:, None], Y, orientation="lower")


def _hat_at_point(
    data: Dataset, x: float, cfg: EstimatorConfig, kernel: Kernel, resolution: int = 201
) -> float:
    """Local-linear smoothing of the raw fit at one point, on the batched
    solver (hot path of the studies)."""
    nodes_u, qw = quadrature_grid(1, resolution)
    h1 = cfg.resolved_h1()
    nodes = x + h1 * nodes_u
    vals, status, _ = tilde_values_at(data, nodes, cfg)
    if np.any(status == _accel.TILDE_FAILED):
        raise NumericalFailure("raw fit failed at a smoothing node")
    B = cfg.resolved_B(data)
    keep = (status == _accel.TILDE_BOUNDED) & (np.abs(vals) <= B)
    weights = qw * kernel.evaluate(nodes_u[:, 0]) * keep
    intercept, _ = _weighted_local_linear(nodes_u, h1, np.where(keep, vals, 0.0), weights, 1)
    return intercept


def _check_at_point(
    data: Dataset, x: float, cfg: EstimatorConfig, kernel: Kernel, resolution: int = 201
) -> float:
    nodes_u, qw = quadrature_grid(1, resolution)
    h1 = cfg.resolved_h1()
    nodes = x + h1 * nodes_u
    vals, status, _ = tilde_values_at(data, nodes, cfg)
    if np.any(status == _accel.TILDE_FAILED):
        raise NumericalFailure("raw fit failed at a smoothing node")
    B = cfg.resolved_B(data)
    keep = (status == _accel.TILDE_BOUNDED) & (np.abs(vals) <= B)
    weights = qw * kernel.evaluate(nodes_u[:, 0]) * keep
    den = float(np.sum(weights))
    if den <= 0.0:
        raise DegenerateDenominator("no smoothing node passed the threshold")
    return float(np.sum(weights * np.where(keep, vals, 0.0)) / den)


def select_bandwidth(
    data: Dataset,
    x: float,
    rng: np.random.Generator,
    *,
    aux_bandwidth: float = 0.25,
    r_fraction: float = 0.9,
    n_mc: int = 1000,
    J: int = 200,
    kernel: Kernel | None = None,
):
    """The data-driven bandwidth recipe at one point: curvature by local
    cubic smoothing, tail parameters from windowed residuals with the 0.9
    threshold rule, design intensity by kernel density, then the
    Monte-Carlo minimiser of the asymptotic MSE.

    Returns (BandwidthPlan, TailParams)."""
    kernel = kernel or biquadratic_kernel(1)
    curv = local_cubic_second_derivative(data, x, aux_bandwidth, kernel)
    res = residuals(data, EstimatorConfig(h=aux_bandwidth), x)
    if res.N1 < 2:
        raise DegenerateSpacings("not enough positive residuals for the tail fit")
    tp = hill_estimate(res, select_r(res.N1, r_fraction))
    dens = kde_density(data.design, x, kernel)
    # the selector sees the curvature magnitude on the concave side: the
    # cubic-smoothing estimate is sign-noisy at these bandwidths, and a
    # spuriously convex value would make the asymptotic MSE monotone in
    # rho and collapse the bandwidth to the grid floor
    ctx = LimitContext(
        c=tp.c_hat,
        b=tp.b_hat,
        curvature=-abs(curv.second_derivative),
        region=full_ball(1),
        J=J,
    )
    rho0, tau0 = rho0_search(ctx, None, n_mc, rng)
    plan = bandwidth_local(
        dens.w_hat, rho0, tp.c_hat, 1, data.n, b_hat=tp.b_hat, tau_at_rho0=tau0
    )
    return plan, tp


_FAILURES = (
    DegenerateSpacings,
    SingularDesign,
    DegenerateDenominator,
    EmptyWindow,
    NumericalFailure,
)


def _one_replication(
    sc: SimScenario,
    rep: int,
    estimator: str,
    bandwidth: str,
    fixed_h: float | None,
    n_mc: int,
    resolution: int,
) -> tuple[int, float, float, str]:
    """Returns (rep, h_used, estimate, failure_reason); reason '' on success."""
    rng = rep_rng(sc.seed, rep)
    data = generate_dataset(sc, rng)
    kernel = biquadratic_kernel(1)
    x = sc.x_eval
    try:
        if estimator == "true":
            h = fixed_h if fixed_h is not None else float("nan")
            return rep, h, sc.truth(), ""
        if bandwidth == "selector":
            plan, _ = select_bandwidth(data, x, rng, n_mc=n_mc, kernel=kernel)
            h = plan.h
        elif bandwidth == "rate_rule":
            h = float(sc.n ** (-1.0 / (1.0 + 2.0 * sc.c)))
        elif bandwidth == "fixed":
            if fixed_h is None:
                raise ValueError("fixed bandwidth mode needs a value")
            h = float(fixed_h)
        else:
            raise ValueError(f"unknown bandwidth mode {bandwidth!r}")
        cfg = EstimatorConfig(h=h, h1=h)
        if estimator == "hat":
            est = _hat_at_point(data, x, cfg, kernel, resolution)
        elif estimator == "check":
            est = _check_at_point(data, x, cfg, kernel, resolution)
        elif estimator == "tilde":
            est = estimate_tilde_a(data, x, cfg).value  # clamped when unbounded
        elif estimator == "naive":
            est = estimate_naive(data, x, h)
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        return rep, h, est, ""
    except _FAILURES as exc:
        return rep, float("nan"), float("nan"), type(exc).__name__


@dataclass(frozen=True)
class MetricsRow:
    model: int
    a0: float
    c: float
    n: int
    mean_h: float
    bias10: float
    var100: float
    mse100: float
    reps_used: int = 0
    n_failed: int = 0


@dataclass
class MetricsTable:
    rows: list[MetricsRow]

    CSV_HEADER = "model,a0,c,n,mean_h,bias10,var100,mse100"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.model},{_fmt(r.a0)},{_fmt(r.c)},{r.n},"
                f"{_fmt(r.mean_h)},{_fmt(r.bias10)},{_fmt(r.var100)},{_fmt(r.mse100)}"
            )
        return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _aggregate(sc: SimScenario, results: list[tuple[int, float, float, str]]) -> MetricsRow:
    results = sorted(results)  # replication order: reproducible reduction
    hs = np.array([h for _, h, _, reason in results if reason == ""])
    ests = np.array([e for _, _, e, reason in results if reason == ""])
    n_failed = sum(1 for _, _, _, reason in results if reason != "")
    if n_failed > 0.10 * sc.reps:
        raise NumericalFailure(
            f"{n_failed}/{sc.reps} replications failed for scenario {sc}"
        )
    err = ests - sc.truth()
    bias = float(np.mean(err))
    var = float(np.mean((err - bias) ** 2))
    mse = float(np.mean(err**2))
    return MetricsRow(
        model=sc.model_id,
        a0=sc.a0,
        c=sc.c,
        n=sc.n,
        mean_h=float(np.mean(hs)) if np.all(np.isfinite(hs)) else float("nan"),
        bias10=10.0 * bias,
        var100=100.0 * var,
        mse100=100.0 * mse,
        reps_used=len(ests),
        n_failed=n_failed,
    )


def run_mc_study(
    scenarios: list[SimScenario],
    *,
    estimator: str = "hat",
    bandwidth: str = "selector",
    fixed_h: float | None = None,
    n_mc: int = 1000,
    resolution: int = 201,
    workers: int = 1,
) -> MetricsTable:
    """Per-scenario replication study with the full estimation recipe.

    Failed replications are excluded and counted; a scenario with more
    than 10% failures raises.  (scenario, seed) pins the table bit for
    bit, whatever the worker count."""
    rows = []
    for sc in scenarios:
        args = [
            (sc, rep, estimator, bandwidth, fixed_h, n_mc, resolution)
            for rep in range(sc.reps)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_one_replication_star, args, chunksize=4))
        else:
            results = [_one_replication(*a) for a in args]
        rows.append(_aggregate(sc, results))
    return MetricsTable(rows)


def _one_replication_star(args):
    return _one_replication(*args)


def table_scenarios(n: int, reps: int = 100, seed: int = DEFAULT_SEED) -> list[SimScenario]:
    """The 18-cell study grid at one sample size: three models, two
    amplitudes each, three tail exponents."""
    out = []
    for model_id in (1, 2, 3):
        for a0 in MODEL_A0[model_id]:
            for c in TABLE_C:
                out.append(SimScenario(model_id=model_id, a0=a0, c=c, n=n, reps=reps, seed=seed))
    return out


@dataclass(frozen=True)
class ComparisonRow:
    model: int
    a0: float
    c: float
    n: int
    h_first: float
    h_second: float
    mse_first: float
    mse_second: float
    ratio: float


@dataclass
class ComparisonResult:
    rows: list[ComparisonRow]

    CSV_HEADER = "model,a0,c,n,h_first,h_second,mse_first,mse_second,ratio"

    @property
    def wins(self) -> int:
        return sum(1 for r in self.rows if r.ratio < 1.0)

    @property
    def median_ratio(self) -> float:
        return float(np.median([r.ratio for r in self.rows]))

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.model},{_fmt(r.a0)},{_fmt(r.c)},{r.n},{_fmt(r.h_first)},"
                f"{_fmt(r.h_second)},{_fmt(r.mse_first)},{_fmt(r.mse_second)},{_fmt(r.ratio)}"
            )
        return "\n".join(lines) + "\n"


def _estimate_for(
    name: str, data: Dataset, x: float, h: float, kernel: Kernel, resolution: int
) -> float:
    cfg = EstimatorConfig(h=h, h1=h)
    if name == "hat":
        return _hat_at_point(data, x, cfg, kernel, resolution)
    if name == "check":
        return _check_at_point(data, x, cfg, kernel, resolution)
    if name == "tilde":
        return estimate_tilde_a(data, x, cfg).value
    if name == "naive":
        return estimate_naive(data, x, h)
    raise ValueError(f"unknown estimator {name!r}")


def run_comparison(
    scenarios: list[SimScenario],
    *,
    estimators: tuple[str, str] = ("hat", "naive"),
    h_grid: np.ndarray | None = None,
    resolution: int = 201,
    workers: int = 1,
) -> ComparisonResult:
    """Per-config MSE ratio of two estimators, each at its own
    MSE-optimal bandwidth chosen deterministically over the shared
    replication set (argmin over the grid, ties to the smaller h)."""
    if h_grid is None:
        h_grid = np.geomspace(0.015, 0.55, 15)
    h_grid = np.asarray(h_grid, dtype=float)
    rows = []
    for sc in scenarios:
        args = [(sc, rep, estimators, h_grid, resolution) for rep in range(sc.reps)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                all_errs = list(pool.map(_comparison_rep_star, args, chunksize=4))
        else:
            all_errs = [_comparison_rep(*a) for a in args]
        errs = np.array(all_errs)  # map preserves replication order: (reps, 2, H)
        mse = np.nanmean(errs**2, axis=0)  # (2, H)
        picks = [int(np.argmin(mse[k])) for k in range(2)]
        mse_first = float(mse[0, picks[0]])
        mse_second = float(mse[1, picks[1]])
        rows.append(
            ComparisonRow(
                model=sc.model_id,
                a0=sc.a0,
                c=sc.c,
                n=sc.n,
                h_first=float(h_grid[picks[0]]),
                h_second=float(h_grid[picks[1]]),
                mse_first=mse_first,
                mse_second=mse_second,
                ratio=mse_first / mse_second,
            )
        )
    return ComparisonResult(rows)


def _comparison_rep(sc, rep, estimators, h_grid, resolution):
    rng = rep_rng(sc.seed, rep)
    data = generate_dataset(sc, rng)
    kernel = biquadratic_kernel(1)
    truth = sc.truth()
    out = np.full((2, len(h_grid)), np.nan)
    for k, name in enumerate(estimators):
        for j, h in enumerate(h_grid):
            try:
                out[k, j] = _estimate_for(name, data, sc.x_eval, float(h), kernel, resolution) - truth
            except _FAILURES:
                pass
    return out


def _comparison_rep_star(args):
    return _comparison_rep(*args)


@dataclass
class RateStudyResult:
    n_list: list[int]
    slopes_first: np.ndarray  # one fitted log-log slope per seed batch
    slopes_second: np.ndarray
    rmse_first: np.ndarray  # (batches, len(n_list))
    rmse_second: np.ndarray


def run_rate_study(
    base: SimScenario,
    n_list: list[int],
    reps: int,
    *,
    estimators: tuple[str, str] = ("tilde", "naive"),
    seed_batches: int = 10,
) -> RateStudyResult:
    """Fitted slope of log RMSE against log n with the deterministic rule
    h = n^(-1/(p+2c)), for two estimators over independent seed batches."""
    if len(n_list) < 2:
        raise ValueError("need at least two sample sizes")
    n_list = sorted(int(v) for v in n_list)
    kernel = biquadratic_kernel(1)
    rmse = np.zeros((2, seed_batches, len(n_list)))
    for bi in range(seed_batches):
        for ni, n in enumerate(n_list):
            sc = replace(base, n=n, reps=reps, seed=base.seed + 7919 * bi)
            h = float(n ** (-1.0 / (1.0 + 2.0 * sc.c)))
            errs = np.zeros((2, reps))
            for rep in range(reps):
                rng = rep_rng(sc.seed, rep)
                data = generate_dataset(sc, rng)
                for k, name in enumerate(estimators):
                    errs[k, rep] = (
                        _estimate_for(name, data, sc.x_eval, h, kernel, 61) - sc.truth()
                    )
            rmse[:, bi, ni] = np.sqrt(np.mean(errs**2, axis=1))
    logn = np.log(np.asarray(n_list, dtype=float))
    slopes = np.zeros((2, seed_batches))
    for k in range(2):
        for bi in range(seed_batches):
            slopes[k, bi] = np.polyfit(logn, np.log(rmse[k, bi]), 1)[0]
    return RateStudyResult(
        n_list=n_list,
        slopes_first=slopes[0],
        slopes_second=slopes[1],
        rmse_first=rmse[0],
        rmse_second=rmse[1],
    )


def synthetic_utility(seed: int = 123123, n: int = 123) -> Dataset:
    """A reproducible stand-in for the utility-company study data (the
    original is not redistributable): log-scale output against a
    log-efficiency response lying under a gently linear upper frontier."""
    rng = np.random.default_rng(seed)
    X = np.sort(rng.uniform(4.2, 11.6, n))
    frontier = 1.5 + 0.6 * X
    ineff = rng.gamma(1.0, 0.35, n)
    Y = frontier - ineff
    return Dataset(X[:, None], Y, orientation="upper")
