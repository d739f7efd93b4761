"""Limit-law engine tests: mark sampler forms, sup-inf functionals against
analytic values and the LP route, tau closed forms, selector determinism
and the smoothed-limit sampler."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from frontier.errors import EmptyNeighbourhood, NumericalFailure, TruncationSuspect
from frontier.kernels import BallRegion, biquadratic_kernel, full_ball
from frontier.limits import (
    LimitContext,
    _draw_batch,
    _q1_via_lp,
    _q3_from_draws,
    bandwidth_global,
    bandwidth_local,
    eval_Q1,
    rho0_search,
    sample_Q3,
    sample_Z,
    sample_Z_series,
    tau,
)
from frontier import _accel


class _StubRng:
    """Deterministic exponential source: every draw equals one."""

    def standard_exponential(self, n):
        return np.ones(n)


def _ctx(c=1.0, b=1.0, curv=-2.0, J=200, region=None):
    return LimitContext(c=c, b=b, curvature=curv, region=region or full_ball(1), J=J)


def test_series_stub_values():
    z = sample_Z_series(1.0, 3, _StubRng(), terms=10_000)
    assert z[0] == pytest.approx(np.exp(-np.euler_gamma), abs=1e-3)
    z2 = sample_Z_series(2.0, 1, _StubRng(), terms=10_000)
    assert z2[0] == pytest.approx(np.exp(-np.euler_gamma / 2.0), abs=1e-3)


def test_series_draws_are_increasing():
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = sample_Z_series(0.7, 20, rng, terms=2000)
        assert np.all(np.diff(z) > 0)


def test_partial_sum_draws_increasing_and_mean():
    rng = np.random.default_rng(1)
    Z = np.vstack([sample_Z(1.0, 10, rng) for _ in range(100_000)])
    assert np.all(np.diff(Z, axis=1) > 0)
    assert Z[:, 0].mean() == pytest.approx(1.0, abs=0.02)


def test_two_sampler_forms_agree_in_distribution():
    # small version of the acceptance check: same law for Z_1
    rng = np.random.default_rng(2)
    n = 4000
    for c in (0.5, 1.0, 2.0):
        a = np.array([sample_Z(c, 1, rng)[0] for _ in range(n)])
        b = np.array([sample_Z_series(c, 1, rng, terms=4000)[0] for _ in range(n)])
        assert ks_2samp(a, b).pvalue > 0.001


def test_q1_deterministic_analytic_values():
    rng = np.random.default_rng(3)
    assert eval_Q1(_ctx(curv=-2.0), 1.0, 0.0, rng) == -1.0
    assert eval_Q1(_ctx(curv=2.0), 1.0, 0.0, rng) == 0.0
    # cap region: the markless optimum scales with the cut distance
    cap = BallRegion(dimension=1, cap_distance=0.5)
    assert eval_Q1(_ctx(curv=-2.0, region=cap), 1.0, 0.0, rng) == pytest.approx(-0.5)


def test_q1_markless_is_deterministic():
    vals = {eval_Q1(_ctx(curv=-2.0), 1.0, 0.0, np.random.default_rng(s)) for s in range(5)}
    assert vals == {-1.0}


def test_q1_zero_bias_is_first_mark():
    v = eval_Q1(_ctx(), 0.0, 1.0, np.random.default_rng(3))
    rng = np.random.default_rng(3)
    U, Z = _draw_batch(full_ball(1), 1.0, 200, 1, rng)
    assert v == Z[0, 0]


def test_q1_mean_of_first_mark():
    # c1 = 0, b = c = 1: the draw is exponential with unit mean
    rng = np.random.default_rng(4)
    U, Z = _draw_batch(full_ball(1), 1.0, 200, 100_000, rng)
    assert Z[:, 0].mean() == pytest.approx(1.0, abs=0.02)


def test_q1_hull_matches_lp_route():
    # dual route: the compiled hull kernel against the generic LP solver
    ctx = _ctx(curv=-1.3, J=60)
    rng = np.random.default_rng(5)
    for _ in range(40):
        U, Z = _draw_batch(ctx.region, ctx.c, ctx.J, 1, rng)
        w = 0.5 * ctx.curvature_scalar * U**2
        marks = ctx.b ** (-1.0 / ctx.c) * Z
        for rho in (0.3, 1.0, 7.0):
            vals, act, flags = _accel.q1_grid(U, w, marks, np.array([rho]))
            v_lp, act_lp = _q1_via_lp(ctx, rho, 1.0, U[0], Z[0])
            assert flags[0, 0] == 0
            assert vals[0, 0] == pytest.approx(v_lp, abs=1e-9)


def test_q1_coupled_monotone_in_mark_weight():
    ctx = _ctx(curv=-0.8, J=100)
    for seed in range(20):
        v1 = eval_Q1(ctx, 1.0, 0.5, np.random.default_rng(seed))
        v2 = eval_Q1(ctx, 1.0, 1.5, np.random.default_rng(seed))
        assert v2 >= v1 - 1e-12


def test_tau_closed_forms():
    rng = np.random.default_rng(6)
    assert tau(_ctx(c=1.0, b=1.0), 0.0, 100_000, rng) == pytest.approx(2.0, rel=0.03)
    rng = np.random.default_rng(7)
    assert tau(_ctx(c=2.0, b=1.0), 0.0, 100_000, rng) == pytest.approx(1.0, rel=0.03)


def test_truncation_guards_fire_at_extreme_bias_weight():
    # with the bias term dominating, the optimum is set by the point
    # geometry alone and regularly lands deep in the mark sequence
    ctx = _ctx(curv=-2.0, J=50)
    with pytest.raises(TruncationSuspect):
        eval_Q1(ctx, 1e6, 1.0, np.random.default_rng(0))
    with pytest.raises(TruncationSuspect):
        tau(ctx, 1e6, 200, np.random.default_rng(0))


def test_tau_nonnegative_and_validates():
    rng = np.random.default_rng(8)
    assert tau(_ctx(), 3.0, 500, rng) >= 0.0
    with pytest.raises(ValueError):
        tau(_ctx(), -1.0, 500, rng)
    with pytest.raises(ValueError):
        tau(_ctx(), 1.0, 50, rng)


def test_rho0_search_determinism_and_degenerate_grid():
    ctx = _ctx(c=0.5, b=0.8, curv=-0.8)
    r1 = rho0_search(ctx, None, 400, np.random.default_rng(9))
    r2 = rho0_search(ctx, None, 400, np.random.default_rng(9))
    assert r1 == r2
    rho0, t0 = rho0_search(ctx, np.array([0.37]), 200, np.random.default_rng(10))
    assert rho0 == 0.37


def test_bandwidth_formula():
    plan = bandwidth_local(1.0, 1.0, 1.0, 1, 1000)
    assert plan.h == pytest.approx(0.1, rel=1e-12)
    plan = bandwidth_local(1.0, 1.0, 0.5, 1, 1000)
    assert plan.h == pytest.approx(1000.0**-0.5, rel=1e-12)
    # the stored h always satisfies the plug-in identity bit-exactly
    assert plan.h == plan.w_hat ** (-1 / (plan.p + 2 * plan.c_hat)) * plan.rho0 ** (
        1 / (2 + plan.p / plan.c_hat)
    ) * plan.n ** (-1 / (plan.p + 2 * plan.c_hat))


def test_global_equals_local_on_identical_contexts():
    ctx = _ctx(c=1.0, b=0.9, curv=-1.1)
    grid = np.geomspace(0.01, 10.0, 9)
    rho0, tau0 = rho0_search(ctx, grid, 300, np.random.default_rng(11))
    local = bandwidth_local(1.7, rho0, ctx.c, 1, 500, tau_at_rho0=tau0)
    glob = bandwidth_global(
        np.array([0.2, 0.5, 0.8]),
        [ctx] * 3,
        np.array([1.7] * 3),
        500,
        grid,
        300,
        np.random.default_rng(11),
    )
    assert glob.rho0 == local.rho0
    assert glob.h == local.h
    assert glob.scope == "global"


def test_global_rejects_varying_exponent():
    with pytest.raises(ValueError):
        bandwidth_global(
            np.array([0.2, 0.8]),
            [_ctx(c=1.0), _ctx(c=1.5)],
            np.array([1.0, 1.0]),
            500,
            np.array([0.1, 1.0]),
            200,
            np.random.default_rng(12),
        )


def test_global_tau_curve_nonnegative():
    ctx = _ctx(c=1.0, b=1.0, curv=-2.0)
    glob = bandwidth_global(
        np.array([0.3, 0.7]),
        [ctx] * 2,
        np.array([2.0, 2.0]),
        400,
        np.geomspace(0.1, 10, 5),
        200,
        np.random.default_rng(13),
    )
    assert glob.tau_at_rho0 >= 0.0


def test_q3_bias_term_alone():
    # huge tail constant kills the marks; flat curvature kills the sup-inf
    ctx = LimitContext(c=1.0, b=1e12, curvature=0.0, region=full_ball(1), J=400)
    q3 = sample_Q3(ctx, 1.0, 1.0, biquadratic_kernel(1), 2.0, np.random.default_rng(14))
    assert q3 == pytest.approx(1.0 / 7.0, abs=1e-6)


def test_q3_zero_rho_positive():
    ctx = LimitContext(c=1.0, b=0.5, curvature=0.0, region=full_ball(1), J=400)
    q3 = sample_Q3(ctx, 1.0, 0.0, biquadratic_kernel(1), 0.0, np.random.default_rng(15))
    assert q3 > 0.0


def test_q3_empty_neighbourhood_and_truncation_guards():
    ctx = LimitContext(c=1.0, b=1.0, curvature=0.0, region=full_ball(1), J=50)
    kernel = biquadratic_kernel(1)
    # points piled far from the left-edge nodes leave them empty
    U = np.linspace(1.5, 2.0, 50)
    Z = np.cumsum(np.ones(50))
    with pytest.raises(EmptyNeighbourhood):
        _q3_from_draws(ctx, 1.0, 0.0, kernel, 0.0, U, Z, 41, True)
    # the smallest mark far out in the sequence trips the truncation guard
    U2 = np.linspace(-2.0, 2.0, 50)
    Z2 = np.concatenate([np.full(49, 50.0), [0.001]])  # minimum at index 50
    with pytest.raises(TruncationSuspect):
        _q3_from_draws(ctx, 1.0, 0.0, kernel, 0.0, U2, Z2, 41, True)


def test_q3_absolute_mode_unbounded_outside_unit_span():
    # with t > 1, origin-anchored geometry has nodes whose windows sit
    # entirely on one side of zero: the supremum diverges there
    ctx = LimitContext(c=1.0, b=1.0, curvature=-1.0, region=full_ball(1), J=400)
    with pytest.raises(NumericalFailure):
        sample_Q3(
            ctx, 3.0, 1.0, biquadratic_kernel(1), 0.0, np.random.default_rng(16), recenter=False
        )


def test_context_validation():
    with pytest.raises(ValueError):
        LimitContext(c=0.0, b=1.0, curvature=0.0, region=full_ball(1))
    with pytest.raises(ValueError):
        LimitContext(c=1.0, b=1.0, curvature=0.0, region=full_ball(1), J=10)
