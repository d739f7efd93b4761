"""Monte-Carlo engine for the extreme-value limit laws of the frontier
estimators: the ascending mark sequence Z, the sup-inf functionals whose
laws the raw and smoothed estimators converge to, the asymptotic mean
squared error tau(rho) they induce, and the plug-in bandwidth selectors
built on its minimiser.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import EmptyNeighbourhood, NumericalFailure, TruncationSuspect
from .kernels import BallRegion, Kernel, kernel_moment_kappa, quadrature_grid, sample_uniform_region
from .lp import LinearProgram, solve_lp

DEFAULT_RHO_GRID = np.geomspace(1e-3, 1e3, 25)


@dataclass(frozen=True)
class LimitContext:
    """Everything the limit law of one frontier fit depends on: the tail
    exponent and constant, the curvature, the local design region and the
    mark-sequence truncation length."""

    c: float
    b: float
    curvature: float | np.ndarray
    region: BallRegion
    J: int = 200
    p: int = 1

    def __post_init__(self):
        if self.c <= 0 or self.b <= 0:
            raise ValueError("tail parameters must be positive")
        if self.J < 50:
            raise ValueError("truncation length J must be at least 50")
        if self.region.dimension != self.p:
            raise ValueError("region dimension mismatch")
        m = np.atleast_2d(np.asarray(self.curvature, dtype=float))
        if m.shape != (self.p, self.p):
            raise ValueError("curvature must be a p x p matrix (scalar for p = 1)")
        if not np.all(np.isfinite(m)):
            raise ValueError("curvature must be finite")
        object.__setattr__(self, "curvature", m)

    @property
    def curvature_scalar(self) -> float:
        if self.p != 1:
            raise ValueError("scalar curvature only defined for p = 1")
        return float(self.curvature[0, 0])


@dataclass(frozen=True)
class BandwidthPlan:
    """A selected bandwidth and the ingredients that produced it; the h
    field always equals the plug-in formula
    w^(-1/(p+2c)) * rho0^(1/(2+p/c)) * n^(-1/(p+2c)) bit-exactly."""

    rho0: float
    tau_at_rho0: float
    c_hat: float
    b_hat: float
    w_hat: float
    n: int
    p: int
    h: float
    scope: str  # "local" | "global"

    def __post_init__(self):
        if self.h != _plugin_h(self.w_hat, self.rho0, self.c_hat, self.p, self.n):
            raise ValueError("bandwidth does not match the plug-in formula")


def _plugin_h(w_hat: float, rho0: float, c_hat: float, p: int, n: int) -> float:
    return (
        w_hat ** (-1.0 / (p + 2.0 * c_hat))
        * rho0 ** (1.0 / (2.0 + p / c_hat))
        * n ** (-1.0 / (p + 2.0 * c_hat))
    )


def sample_Z(c: float, J: int, rng: np.random.Generator) -> np.ndarray:
    """One joint draw of the ascending mark sequence (Z_1, ..., Z_J) via
    the partial-sum representation Z_j = (E_1 + ... + E_j)^(1/c) with unit
    exponentials; the truncated-series sampler below is the validation
    oracle for this distributional shortcut."""
    if c <= 0 or J < 1:
        raise ValueError("need c > 0 and J >= 1")
    return np.cumsum(rng.standard_exponential(J)) ** (1.0 / c)


def sample_Z_series(
    c: float, J: int, rng: np.random.Generator, terms: int = 10_000
) -> np.ndarray:
    """The mark sequence by its defining series, truncated at ``terms``:

        Z_j = exp[ -c^{-1} ( sum_{i>=j} (E_i - 1)/i + gamma - H_{j-1} ) ]

    with gamma Euler's constant and H the harmonic numbers.  Slower, kept
    as the independent check of the partial-sum sampler."""
    if c <= 0 or J < 1:
        raise ValueError("need c > 0 and J >= 1")
    if terms < J:
        raise ValueError("series truncation must cover J")
    E = rng.standard_exponential(terms)
    i = np.arange(1, terms + 1)
    contrib = (E - 1.0) / i
    # tails[j-1] = sum_{i >= j} contrib_i
    tails = np.cumsum(contrib[::-1])[::-1]
    harmonic = np.concatenate([[0.0], np.cumsum(1.0 / i[: J - 1])]) if J > 1 else np.zeros(1)
    return np.exp(-(tails[:J] + np.euler_gamma - harmonic) / c)


def _draw_batch(
    region: BallRegion, c: float, J: int, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """n independent draws of (U_1..U_J, Z_1..Z_J); U first, then Z, so
    identical seeds give identical batches."""
    p = region.dimension
    U = sample_uniform_region(region, rng, size=n * J).reshape(n, J, p)
    if p == 1:
        U = U[:, :, 0]
    E = rng.standard_exponential((n, J))
    Z = np.cumsum(E, axis=1) ** (1.0 / c)
    return U, Z


def _q1_via_lp(ctx: LimitContext, c1: float, c2: float, U: np.ndarray, Z: np.ndarray):
    """Reference evaluation of one sup-inf draw through the generic LP
    solver: maximise t subject to t <= d_i + c1 * beta.U_i."""
    J = ctx.J
    Umat = U.reshape(J, ctx.p)
    quad = 0.5 * np.einsum("ij,jk,ik->i", Umat, ctx.curvature, Umat)
    d = c1 * quad + c2 * ctx.b ** (-1.0 / ctx.c) * Z
    M = np.empty((J, ctx.p + 1))
    M[:, 0] = 1.0
    M[:, 1:] = -c1 * Umat
    obj = np.zeros(ctx.p + 1)
    obj[0] = 1.0
    out = solve_lp(LinearProgram(M, d, obj), known_feasible=True)
    if out.status != "optimal":
        raise NumericalFailure("sup-inf LP unbounded: the region should span the origin")
    slack = d - (out.value + (M[:, 1:] @ out.solution[1:]))
    active = np.nonzero(slack <= 1e-7 * (1.0 + np.abs(d)))[0]
    act = int(active.max()) + 1 if len(active) else 1
    return float(out.value), act


def _q1_closed_form(ctx: LimitContext, c1: float) -> float:
    """Deterministic continuum value when the marks are switched off:
    sup_beta inf over the whole region of c1*(beta.u + u'Au/2); p = 1."""
    if ctx.p != 1:
        raise NotImplementedError("the markless closed form is provided for p = 1")
    add = ctx.curvature_scalar
    if add >= 0:
        return 0.0
    region = ctx.region
    if region.is_full_ball:
        lo, hi = -1.0, 1.0
    elif region.direction[0] > 0:
        lo, hi = -region.cap_distance, 1.0
    else:
        lo, hi = -1.0, region.cap_distance
    return float(c1 * (-0.5 * add * lo * hi))


def eval_Q1(ctx: LimitContext, c1: float, c2: float, rng: np.random.Generator) -> float:
    """One draw of the sup-inf limit functional

        sup_beta inf_i [ c1 (beta.U_i + U_i'A U_i / 2) + c2 b^(-1/c) Z_i ].

    With c2 = 0 the value is the deterministic continuum optimum.  Raises
    TruncationSuspect when the optimum is attained beyond index J/2 and
    NumericalFailure if the supremum is unbounded (the region must span
    the origin)."""
    if c1 < 0 or c2 < 0:
        raise ValueError("weights must be nonnegative")
    if c2 == 0.0:
        return _q1_closed_form(ctx, c1)
    U, Z = _draw_batch(ctx.region, ctx.c, ctx.J, 1, rng)
    if ctx.p == 1:
        w = 0.5 * ctx.curvature_scalar * U**2
        marks = c2 * ctx.b ** (-1.0 / ctx.c) * Z
        vals, act, flags = _accel.q1_grid(U, w, marks, np.array([c1]))
        if flags[0, 0]:
            raise NumericalFailure("sup-inf unbounded: the region should span the origin")
        value, amax = float(vals[0, 0]), int(act[0, 0])
    else:
        value, amax = _q1_via_lp(ctx, c1, c2, U[0], Z[0])
    if amax > ctx.J / 2:
        raise TruncationSuspect(f"optimum attained at index {amax} of {ctx.J}")
    return value


def _tau_on_grid(
    ctx: LimitContext, rhos: np.ndarray, U: np.ndarray, Z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Mean squared sup-inf values on a rho grid over shared draws.

    Returns (tau values, suspect fraction per rho).  Unbounded draws raise
    NumericalFailure outright."""
    rhos = np.asarray(rhos, dtype=float)
    if ctx.p == 1:
        w = 0.5 * ctx.curvature_scalar * U**2
        marks = ctx.b ** (-1.0 / ctx.c) * Z
        vals, act, flags = _accel.q1_grid(U, w, marks, rhos)
        if np.any(flags):
            raise NumericalFailure("sup-inf unbounded on some draw")
        taus = np.mean(vals**2, axis=1)
        suspects = np.mean(act > ctx.J / 2, axis=1)
        return taus, suspects
    n = U.shape[0]
    taus = np.empty(len(rhos))
    suspects = np.empty(len(rhos))
    for k, rho in enumerate(rhos):
        acc = 0.0
        bad = 0
        for d in range(n):
            v, amax = _q1_via_lp(ctx, rho, 1.0, U[d], Z[d])
            acc += v * v
            if amax > ctx.J / 2:
                bad += 1
        taus[k] = acc / n
        suspects[k] = bad / n
    return taus, suspects


def tau(ctx: LimitContext, rho: float, n_mc: int, rng: np.random.Generator) -> float:
    """Monte-Carlo asymptotic mean squared error at bias weight rho: the
    mean of squared sup-inf draws.  Deterministic given the seed; fails if
    more than 1% of draws attain their optimum past index J/2."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if n_mc < 100:
        raise ValueError("n_mc must be at least 100")
    total = 0.0
    suspect = 0.0
    done = 0
    chunk = 20_000 if ctx.p == 1 else 1_000
    while done < n_mc:
        take = min(chunk, n_mc - done)
        U, Z = _draw_batch(ctx.region, ctx.c, ctx.J, take, rng)
        taus, susp = _tau_on_grid(ctx, np.array([rho]), U, Z)
        total += taus[0] * take
        suspect += susp[0] * take
        done += take
    if suspect / n_mc > 0.01:
        raise TruncationSuspect(
            f"{100 * suspect / n_mc:.2f}% of draws attained the optimum past J/2"
        )
    return total / n_mc


def _argmin_smallest(rhos: np.ndarray, taus: np.ndarray) -> int:
    # ties break toward the smaller rho; grids are ascending
    best = np.min(taus)
    return int(np.nonzero(taus == best)[0][0])


def _minimise_with_refinement(evaluate, grid: np.ndarray) -> tuple[float, float]:
    """Coarse argmin over the grid, one geometric refinement pass between
    the argmin's neighbours, final argmin over the union (ties to the
    smaller rho).  ``evaluate`` maps a rho vector to tau values on shared
    draws."""
    taus = evaluate(grid)
    i = _argmin_smallest(grid, taus)
    if len(grid) == 1:
        return float(grid[0]), float(taus[0])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    refined = np.geomspace(lo, hi, 11)
    taus_r = evaluate(refined)
    all_rho = np.concatenate([grid, refined])
    all_tau = np.concatenate([taus, taus_r])
    order = np.argsort(all_rho, kind="stable")
    all_rho = all_rho[order]
    all_tau = all_tau[order]
    j = _argmin_smallest(all_rho, all_tau)
    return float(all_rho[j]), float(all_tau[j])


def rho0_search(
    ctx: LimitContext,
    rho_grid: np.ndarray | None = None,
    n_mc: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Minimise tau over a rho grid with common random numbers (one draw
    batch shared by every grid point), then refine once around the coarse
    argmin.  Ties break toward smaller rho.  Never raises on truncation
    warnings: the selector is pinned by the returned argmin either way."""
    if rng is None:
        rng = np.random.default_rng()
    grid = DEFAULT_RHO_GRID if rho_grid is None else np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("rho grid must be a nonempty ascending vector")
    U, Z = _draw_batch(ctx.region, ctx.c, ctx.J, n_mc, rng)
    return _minimise_with_refinement(lambda rhos: _tau_on_grid(ctx, rhos, U, Z)[0], grid)


def bandwidth_local(
    w_hat: float,
    rho0: float,
    c_hat: float,
    p: int,
    n: int,
    *,
    b_hat: float = float("nan"),
    tau_at_rho0: float = float("nan"),
) -> BandwidthPlan:
    """Plug-in bandwidth at one point from the estimated ingredients."""
    if w_hat <= 0 or rho0 < 0 or c_hat <= 0 or n < 1:
        raise ValueError("selector inputs must be positive")
    h = _plugin_h(w_hat, rho0, c_hat, p, n)
    return BandwidthPlan(
        rho0=float(rho0),
        tau_at_rho0=float(tau_at_rho0),
        c_hat=float(c_hat),
        b_hat=float(b_hat),
        w_hat=float(w_hat),
        n=int(n),
        p=int(p),
        h=float(h),
        scope="local",
    )


def bandwidth_global(
    xs: np.ndarray,
    contexts: list[LimitContext],
    w_hats: np.ndarray,
    n: int,
    rho_grid: np.ndarray | None = None,
    n_mc: int = 1000,
    rng: np.random.Generator | None = None,
) -> BandwidthPlan:
    """Global bandwidth: tau integrated over the evaluation grid by the
    trapezoid rule, one shared draw batch across grid points and rho
    (common random numbers), and the spatially averaged intensity.

    Requires a constant tail exponent and a common design region across
    the grid."""
    if rng is None:
        rng = np.random.default_rng()
    xs = np.asarray(xs, dtype=float)
    w_hats = np.asarray(w_hats, dtype=float)
    if not (len(xs) == len(contexts) == len(w_hats)) or len(xs) == 0:
        raise ValueError("xs, contexts and w_hats must align")
    cs = {ctx.c for ctx in contexts}
    if len(cs) != 1:
        raise ValueError("the global selector requires a constant tail exponent")
    regions = {
        (ctx.region.dimension, ctx.region.cap_distance, tuple(ctx.region.direction))
        for ctx in contexts
    }
    if len(regions) != 1:
        raise ValueError("the global selector requires a common design region")
    grid = DEFAULT_RHO_GRID if rho_grid is None else np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("rho grid must be a nonempty ascending vector")

    ctx0 = contexts[0]
    U, Z = _draw_batch(ctx0.region, ctx0.c, ctx0.J, n_mc, rng)

    def integrated(rhos: np.ndarray) -> np.ndarray:
        rows = np.stack([_tau_on_grid(ctx, rhos, U, Z)[0] for ctx in contexts])
        if len(xs) == 1:
            return rows[0]
        return np.trapezoid(rows, xs, axis=0)

    rho0, tau0 = _minimise_with_refinement(integrated, grid)
    w_bar = float(w_hats[0]) if len(xs) == 1 else float(
        np.trapezoid(w_hats, xs) / (xs[-1] - xs[0])
    )
    h = _plugin_h(w_bar, rho0, ctx0.c, ctx0.p, n)
    return BandwidthPlan(
        rho0=rho0,
        tau_at_rho0=tau0,
        c_hat=float(ctx0.c),
        b_hat=float("nan"),
        w_hat=w_bar,
        n=int(n),
        p=int(ctx0.p),
        h=float(h),
        scope="global",
    )


def _q3_from_draws(
    ctx: LimitContext,
    t: float,
    rho: float,
    kernel: Kernel,
    laplacian_a: float,
    U: np.ndarray,
    Z: np.ndarray,
    resolution: int,
    recenter: bool,
) -> float:
    """Q3 value from explicit point/mark draws (split out for tests)."""
    marks = ((t + 1.0) ** ctx.p * ctx.b) ** (-1.0 / ctx.c) * Z
    order = np.argsort(U)
    Us = U[order]
    ms = marks[order]
    zidx = order  # original (ascending-mark) index of each sorted point
    add = ctx.curvature_scalar

    nodes, qw = quadrature_grid(1, resolution)
    kw = kernel.evaluate(nodes[:, 0])
    total = 0.0
    worst = 0
    for v, wq, kv in zip(nodes[:, 0], qw, kw):
        if kv <= 0.0:
            continue
        unode = t * v
        lo = int(np.searchsorted(Us, unode - 1.0))
        hi = int(np.searchsorted(Us, unode + 1.0, side="right"))
        if hi - lo == 0:
            raise EmptyNeighbourhood(f"no points within unit radius of node {unode:.3f}")
        if rho == 0.0:
            pos = lo + int(np.argmin(ms[lo:hi]))
            q2 = float(ms[pos])
            act = int(zidx[pos]) + 1
        else:
            xcoord = Us[lo:hi] - unode if recenter else Us[lo:hi]
            ys = rho * (0.5 * add * xcoord**2) + ms[lo:hi]
            value, pa, pb, st = _accel.supinf_hull(
                np.ascontiguousarray(xcoord), np.ascontiguousarray(ys)
            )
            if st != 0:
                raise NumericalFailure(
                    f"sup-inf unbounded at node {unode:.3f}; points span no origin"
                )
            q2 = float(value)
            act = int(max(zidx[lo + pa], zidx[lo + pb])) + 1
        worst = max(worst, act)
        total += wq * kv * q2
    if worst > ctx.J / 2:
        raise TruncationSuspect(f"optimum attained at index {worst} of {ctx.J}")
    kappa = kernel_moment_kappa(kernel, 1)
    return 0.5 * rho * t * t * kappa * laplacian_a + total


def sample_Q3(
    ctx: LimitContext,
    t: float,
    rho: float,
    kernel: Kernel,
    laplacian_a: float,
    rng: np.random.Generator,
    *,
    resolution: int = 101,
    recenter: bool = True,
) -> float:
    """One draw of the smoothed-estimator limit: the curvature bias term
    rho t^2 kappa lap(a)/2 plus the kernel integral of local sup-inf
    values over points marked by the ascending sequence, rescaled by
    ((t+1)^p b)^(-1/c).

    Points are uniform on the radius-(t+1) ball; each quadrature node u
    (|u| <= t) sees the points within unit radius of it.  ``recenter``
    measures the linear and quadratic geometry from the node rather than
    the origin, which keeps the supremum finite for every node and is the
    form the direct simulations reproduce; the origin-anchored variant is
    kept for comparison."""
    if ctx.p != 1:
        raise NotImplementedError("the smoothed limit sampler covers p = 1")
    if t <= 0:
        raise ValueError("the bandwidth ratio t must be positive")
    if not ctx.region.is_full_ball:
        raise NotImplementedError("interior points only (full-ball region)")
    U = rng.uniform(-(t + 1.0), t + 1.0, ctx.J)
    Z = sample_Z(ctx.c, ctx.J, rng)
    return _q3_from_draws(ctx, t, rho, kernel, laplacian_a, U, Z, resolution, recenter)
