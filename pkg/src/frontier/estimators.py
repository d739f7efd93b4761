"""Frontier estimators: the raw local-LP fit, the naive windowed-extremum
comparator, local-linear and local-average smoothings, and residual
extraction.

Internally the frontier is always a lower envelope of the responses
(errors are nonnegative, so data lie above the curve).  Datasets declared
with ``orientation="upper"`` are negated on ingestion; curve-level
functions restore the observed orientation on output, while the
point-level operations below work on the internal scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _accel
from .errors import DegenerateDenominator, EmptyWindow, NumericalFailure, SingularDesign
from .kernels import Kernel, biquadratic_kernel, quadrature_grid
from .lp import LinearProgram, solve_lp

BOUNDED = "bounded"
UNBOUNDED = "unbounded"

_ZERO_RESIDUAL = 1e-12  # residuals this close to zero have no usable log


@dataclass(frozen=True)
class Dataset:
    """Design points, responses and the frontier orientation.

    ``response`` keeps the observations as given; ``envelope_response``
    exposes the internal lower-envelope scale (negated for upper
    frontiers).
    """

    design: np.ndarray  # (n, p)
    response: np.ndarray  # (n,)
    orientation: str = "lower"

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.response, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("design must be (n, p) with matching responses")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one observation")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        if self.orientation not in ("lower", "upper"):
            raise ValueError("orientation must be 'lower' or 'upper'")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def envelope_response(self) -> np.ndarray:
        return self.response if self.orientation == "lower" else -self.response

    def to_observed(self, value):
        """Map an internal-scale estimate back to the observed orientation."""
        return value if self.orientation == "lower" else -value


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning constants for one frontier fit.

    ``h`` is the fitting bandwidth, ``h1`` the smoothing bandwidth
    (defaults to h), ``B`` the smoothing threshold (defaults to ten times
    the largest absolute response), ``k_min`` the smallest acceptable
    local sample (defaults to p + 2, the fewest points that pin down the
    p + 1 fit variables), and ``clamp_value`` replaces the level of
    unbounded fits.
    """

    h: float
    h1: float | None = None
    B: float | None = None
    k_min: int | None = None
    clamp_value: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError("bandwidth h must be positive")
        if self.h1 is not None and not (np.isfinite(self.h1) and self.h1 > 0):
            raise ValueError("bandwidth h1 must be positive")
        if self.B is not None and not (np.isfinite(self.B) and self.B > 0):
            raise ValueError("threshold B must be positive")

    def resolved_h1(self) -> float:
        return self.h if self.h1 is None else self.h1

    def resolved_B(self, data: Dataset) -> float:
        if self.B is not None:
            return self.B
        return 10.0 * max(float(np.max(np.abs(data.response))), 1.0)

    def resolved_k_min(self, data: Dataset) -> int:
        if self.k_min is None:
            # default p + 2, capped so degenerate tiny datasets use all points
            return min(data.p + 2, data.n)
        if self.k_min < data.p + 2:
            raise ValueError("k_min must be at least p + 2")
        return self.k_min


@dataclass(frozen=True)
class LocalFit:
    """One local-LP frontier fit: level, slope and window diagnostics."""

    value: float
    slope: np.ndarray
    status: str  # "bounded" | "unbounded"
    h_effective: float
    n_local: int


@dataclass(frozen=True)
class ResidualSet:
    """Strictly positive frontier residuals near a point, sorted ascending."""

    residuals: np.ndarray
    N1: int
    x: np.ndarray
    h: float

    def __post_init__(self):
        r = np.asarray(self.residuals, dtype=float)
        if r.ndim != 1 or len(r) != self.N1:
            raise ValueError("residual count mismatch")
        if len(r) and (np.any(r <= 0) or np.any(np.diff(r) < 0)):
            raise ValueError("residuals must be positive and ascending")
        object.__setattr__(self, "residuals", r)
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))


def build_residual_set(raw_residuals: Iterable[float], x, h: float) -> ResidualSet:
    """Keep the strictly positive raw residuals (zeros within 1e-12 are
    dropped: they carry no log information), sort ascending."""
    raw = np.asarray(list(raw_residuals), dtype=float)
    kept = np.sort(raw[raw > _ZERO_RESIDUAL])
    return ResidualSet(residuals=kept, N1=len(kept), x=x, h=h)


def expand_window(data: Dataset, x, h: float, k_min: int) -> float:
    """Smallest radius >= h holding at least k_min design points.

    Exactly the k_min-th nearest-neighbour distance when expansion is
    needed; raises EmptyWindow when the dataset itself is too small.
    """
    if k_min < 1:
        raise ValueError("k_min must be positive")
    if data.n < k_min:
        raise EmptyWindow(f"need {k_min} design points, dataset has {data.n}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dist = np.linalg.norm(data.design - x[None, :], axis=1)
    if int(np.sum(dist <= h)) >= k_min:
        return float(h)
    return float(np.partition(dist, k_min - 1)[k_min - 1])


def _window_indices(data: Dataset, x: np.ndarray, radius: float) -> np.ndarray:
    dist = np.linalg.norm(data.design - x[None, :], axis=1)
    pad = radius + 1e-9 * (np.abs(radius) + np.linalg.norm(x) + 1.0)
    return np.nonzero(dist <= pad)[0]


def estimate_tilde_a(data: Dataset, x, cfg: EstimatorConfig) -> LocalFit:
    """Raw frontier level at x: the highest hyperplane lying on the
    envelope side of every windowed observation, solved as a small LP.

    Unbounded fits (all windowed points in a half-space through x) are
    reported with ``status="unbounded"`` and the level clamped to
    ``cfg.clamp_value``.  Values are on the internal lower-envelope scale.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k_min = cfg.resolved_k_min(data)
    h_eff = expand_window(data, x, cfg.h, k_min)
    idx = _window_indices(data, x, h_eff)
    y = data.envelope_response[idx]
    n_local = len(idx)

    ymean = float(np.mean(y))
    yscale = max(float(np.max(np.abs(y - ymean))), 1e-12)
    xscale = h_eff if h_eff > 0 else 1.0
    M = np.empty((n_local, data.p + 1))
    M[:, 0] = 1.0
    M[:, 1:] = (data.design[idx] - x[None, :]) / xscale
    g = (y - ymean) / yscale
    obj = np.zeros(data.p + 1)
    obj[0] = 1.0

    out = solve_lp(LinearProgram(M, g, obj), known_feasible=True, tol=1e-11)
    if out.status == "optimal":
        value = ymean + yscale * out.solution[0]
        slope = out.solution[1:] * (yscale / xscale)
        return LocalFit(float(value), slope, BOUNDED, h_eff, n_local)
    if out.status == "unbounded":
        return LocalFit(float(cfg.clamp_value), np.full(data.p, np.nan), UNBOUNDED, h_eff, n_local)
    raise NumericalFailure("frontier LP reported infeasible on a feasible system")


def estimate_naive(data: Dataset, x, h: float) -> float:
    """Windowed extremum toward the frontier side (internal scale: the
    minimum response in the window)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h_eff = expand_window(data, x, h, 1)
    idx = _window_indices(data, x, h_eff)
    return float(np.min(data.envelope_response[idx]))


def tilde_values_at(
    data: Dataset, points: np.ndarray, cfg: EstimatorConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched raw fits at many points: (values, status codes, h_eff).

    Status codes follow _accel: 0 bounded, 1 unbounded (clamped), 3 failed.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != data.p:
        raise ValueError("points dimension mismatch")
    k_min = cfg.resolved_k_min(data)
    if data.n < k_min:
        raise EmptyWindow(f"need {k_min} design points, dataset has {data.n}")
    return _accel.tilde_batch(
        data.design,
        data.envelope_response,
        np.ascontiguousarray(points),
        float(cfg.h),
        int(k_min),
        float(cfg.clamp_value),
        1e-11,
    )


def residuals(data: Dataset, cfg: EstimatorConfig, x) -> ResidualSet:
    """Frontier residuals at every design point within h of x.

    Each residual is the gap between the observed response and the raw
    fit re-estimated at that design point (a design point is always a
    constraint of its own window, so residuals are nonnegative up to
    solver tolerance); only strictly positive residuals are kept.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dist = np.linalg.norm(data.design - x[None, :], axis=1)
    members = np.nonzero(dist <= cfg.h)[0]
    if len(members) == 0:
        return build_residual_set([], x, cfg.h)
    vals, status, _ = tilde_values_at(data, data.design[members], cfg)
    if np.any(status == _accel.TILDE_FAILED):
        raise NumericalFailure("raw fit failed at a design point")
    ok = status == _accel.TILDE_BOUNDED
    raw = data.envelope_response[members][ok] - vals[ok]
    return build_residual_set(raw, x, cfg.h)


def _weighted_local_linear(
    u_nodes: np.ndarray, h1: float, values: np.ndarray, weights: np.ndarray, p: int
) -> tuple[float, np.ndarray]:
    """Weighted least squares of values on (1, h1*u); returns (intercept,
    slope).  Raises SingularDesign when the surviving support is degenerate."""
    if np.count_nonzero(weights > 0) < p + 1:
        raise SingularDesign("fewer surviving nodes than fit coefficients")
    design = np.column_stack([np.ones(len(values)), h1 * u_nodes])
    W = weights[:, None]
    G = design.T @ (W * design)
    rhs = design.T @ (weights * values)
    eigs = np.linalg.eigvalsh(G)
    if eigs[0] <= 1e-12 * max(eigs[-1], 1e-300):
        raise SingularDesign("surviving smoothing nodes are collinear")
    coef = np.linalg.solve(G, rhs)
    return float(coef[0]), coef[1:]


def smooth_hat_a(
    raw: Callable[[np.ndarray], LocalFit],
    x,
    cfg: EstimatorConfig,
    kernel: Kernel,
    *,
    data: Dataset | None = None,
    resolution: int = 201,
) -> float:
    """Local-linear smoothing of the raw fit: minimise the kernel-weighted
    squared distance between raw levels and an affine function over the
    h1-ball, keeping only bounded nodes with |level| <= B; returns the
    intercept.

    ``raw`` maps a location to its LocalFit; ``data`` is only consulted
    for the default threshold B.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = len(x)
    h1 = cfg.resolved_h1()
    B = cfg.B if cfg.B is not None else cfg.resolved_B(data) if data is not None else None
    if B is None:
        raise ValueError("threshold B is required (pass cfg.B or data)")
    nodes, qw = quadrature_grid(p, resolution)
    vals = np.empty(len(qw))
    keep = np.zeros(len(qw), dtype=bool)
    for i, u in enumerate(nodes):
        fit = raw(x + h1 * u)
        if fit.status == BOUNDED and abs(fit.value) <= B:
            vals[i] = fit.value
            keep[i] = True
        else:
            vals[i] = 0.0
    weights = qw * kernel.evaluate(nodes if p > 1 else nodes[:, 0]) * keep
    intercept, _ = _weighted_local_linear(nodes, h1, vals, weights, p)
    return intercept


def smooth_check_a(
    raw: Callable[[np.ndarray], LocalFit],
    x,
    cfg: EstimatorConfig,
    kernel: Kernel,
    *,
    data: Dataset | None = None,
    resolution: int = 201,
) -> float:
    """Local-average smoothing of the raw fit: the thresholded ratio of
    kernel integrals over the h1-ball."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = len(x)
    h1 = cfg.resolved_h1()
    B = cfg.B if cfg.B is not None else cfg.resolved_B(data) if data is not None else None
    if B is None:
        raise ValueError("threshold B is required (pass cfg.B or data)")
    nodes, qw = quadrature_grid(p, resolution)
    num = 0.0
    den = 0.0
    for i, u in enumerate(nodes):
        fit = raw(x + h1 * u)
        if fit.status == BOUNDED and abs(fit.value) <= B:
            w = qw[i] * kernel.evaluate(u if p > 1 else float(u[0]))
            num += w * fit.value
            den += w
    if den <= 0.0:
        raise DegenerateDenominator("no smoothing node passed the threshold")
    return num / den


def make_raw_fitter(data: Dataset, cfg: EstimatorConfig) -> Callable[[np.ndarray], LocalFit]:
    """Cached location -> LocalFit map backed by the batched solver.

    The cache behaves as a write-once map keyed by location and bandwidth,
    so concurrent readers always observe the same fit.
    """
    cache: dict[tuple, LocalFit] = {}

    def fit(pt: np.ndarray) -> LocalFit:
        pt = np.atleast_1d(np.asarray(pt, dtype=float))
        key = (pt.tobytes(), cfg.h, cfg.k_min)
        hit = cache.get(key)
        if hit is not None:
            return hit
        vals, status, h_eff = tilde_values_at(data, pt[None, :], cfg)
        if status[0] == _accel.TILDE_FAILED:
            raise NumericalFailure("raw frontier fit failed")
        st = BOUNDED if status[0] == _accel.TILDE_BOUNDED else UNBOUNDED
        out = LocalFit(float(vals[0]), np.full(data.p, np.nan), st, float(h_eff[0]), -1)
        cache[key] = out
        return out

    return fit


@dataclass(frozen=True)
class CurvePoint:
    x: np.ndarray
    a_tilde: float
    a_smooth: float
    status: str
    h_used: float


def estimate_curve(
    data: Dataset,
    grid: Sequence,
    cfg: EstimatorConfig | Sequence[EstimatorConfig],
    *,
    smoother: str = "hat",
    kernel: Kernel | None = None,
    resolution: int = 201,
) -> list[CurvePoint]:
    """Frontier estimates along a grid; per-point failures are recorded in
    the status column and never abort the sweep.

    Output values are restored to the observed orientation of the data.
    """
    if smoother not in ("hat", "check", "none"):
        raise ValueError("smoother must be 'hat', 'check' or 'none'")
    if kernel is None:
        kernel = biquadratic_kernel(data.p)
    grid = [np.atleast_1d(np.asarray(g, dtype=float)) for g in grid]
    cfgs = list(cfg) if isinstance(cfg, (list, tuple)) else [cfg] * len(grid)
    if len(cfgs) != len(grid):
        raise ValueError("one config per grid point required")

    sign = 1.0 if data.orientation == "lower" else -1.0
    out: list[CurvePoint] = []
    fitters: dict[EstimatorConfig, Callable] = {}
    for x, c in zip(grid, cfgs):
        raw_fn = fitters.setdefault(c, make_raw_fitter(data, c))
        try:
            fit = estimate_tilde_a(data, x, c)
        except EmptyWindow:
            out.append(CurvePoint(x, np.nan, np.nan, "empty_window", np.nan))
            continue
        except NumericalFailure:
            out.append(CurvePoint(x, np.nan, np.nan, "failed", np.nan))
            continue
        a_tilde = sign * fit.value
        if smoother == "none":
            out.append(CurvePoint(x, a_tilde, np.nan, fit.status, fit.h_effective))
            continue
        try:
            if smoother == "hat":
                sm = smooth_hat_a(raw_fn, x, c, kernel, data=data, resolution=resolution)
            else:
                sm = smooth_check_a(raw_fn, x, c, kernel, data=data, resolution=resolution)
            out.append(CurvePoint(x, a_tilde, sign * sm, fit.status, fit.h_effective))
        except (SingularDesign, DegenerateDenominator, NumericalFailure):
            out.append(CurvePoint(x, a_tilde, np.nan, "smoother_failed", fit.h_effective))
    return out
