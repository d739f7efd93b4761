"""Frontier estimator tests: hand cases, envelope/equivariance properties,
smoothing oracles and the curve sweep."""

import numpy as np
import pytest

from frontier.errors import DegenerateDenominator, EmptyWindow, SingularDesign
from frontier.estimators import (
    Dataset,
    EstimatorConfig,
    LocalFit,
    build_residual_set,
    estimate_curve,
    estimate_naive,
    estimate_tilde_a,
    expand_window,
    make_raw_fitter,
    residuals,
    smooth_check_a,
    smooth_hat_a,
)
from frontier.kernels import biquadratic_kernel


def _random_dataset(rng, n=60, p=1):
    X = rng.uniform(0, 1, (n, p))
    Y = np.sin(3 * X[:, 0]) + rng.gamma(1.0, 0.5, n)
    return Dataset(X, Y)


def test_two_point_fit():
    ds = Dataset(np.array([[-0.5], [0.5]]), np.array([1.0, 3.0]))
    fit = estimate_tilde_a(ds, 0.0, EstimatorConfig(h=1.0))
    assert fit.status == "bounded"
    assert fit.value == pytest.approx(2.0, abs=1e-9)
    assert fit.slope[0] == pytest.approx(2.0, abs=1e-9)


def test_half_space_is_unbounded_and_clamped():
    ds = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 3.0]))
    fit = estimate_tilde_a(ds, 0.0, EstimatorConfig(h=5.0, clamp_value=-7.5, k_min=3))
    assert fit.status == "unbounded"
    assert fit.value == -7.5


def test_matches_vertex_enumeration():
    import itertools

    rng = np.random.default_rng(99)
    for _ in range(30):
        ds = _random_dataset(rng, n=10)
        cfg = EstimatorConfig(h=2.0, k_min=3)  # window covers everything
        fit = estimate_tilde_a(ds, 0.5, cfg)
        assert fit.status == "bounded"
        # oracle: best feasible pair-intersection value of the window LP
        A = np.column_stack([np.ones(ds.n), ds.design[:, 0] - 0.5])
        b = ds.response
        best = -np.inf
        for i, j in itertools.combinations(range(ds.n), 2):
            S = A[[i, j]]
            if abs(np.linalg.det(S)) < 1e-12:
                continue
            z = np.linalg.solve(S, b[[i, j]])
            if np.all(A @ z <= b + 1e-9):
                best = max(best, z[0])
        assert fit.value == pytest.approx(best, abs=1e-9)


def test_expand_window():
    ds = Dataset(np.array([[0.1], [0.2], [0.3]]), np.zeros(3))
    assert expand_window(ds, 0.0, 0.01, 3) == pytest.approx(0.3, abs=1e-15)
    assert expand_window(ds, 0.0, 0.5, 3) == 0.5  # already holds k_min
    with pytest.raises(EmptyWindow):
        expand_window(ds, 0.0, 0.1, 4)


def test_naive_is_windowed_extremum():
    ds = Dataset(np.array([[0.0], [0.1], [0.2]]), np.array([1.0, 3.0, 2.0]))
    assert estimate_naive(ds, 0.1, 0.5) == 1.0
    assert estimate_naive(ds, 0.0, 0.01) == 1.0  # single point in window


def test_tilde_on_envelope_side_of_naive():
    rng = np.random.default_rng(5)
    for _ in range(25):
        ds = _random_dataset(rng)
        cfg = EstimatorConfig(h=0.3)
        fit = estimate_tilde_a(ds, 0.5, cfg)
        if fit.status == "bounded":
            assert fit.value >= estimate_naive(ds, 0.5, fit.h_effective) - 1e-9


def test_residual_nonnegativity_and_sorting():
    rng = np.random.default_rng(6)
    ds = _random_dataset(rng, n=100)
    res = residuals(ds, EstimatorConfig(h=0.3), 0.5)
    assert res.N1 > 0
    assert np.all(res.residuals > 0)
    assert np.all(np.diff(res.residuals) >= 0)


def test_support_points_of_own_window_are_excluded():
    # noiseless convex data: every point is a support point of its own
    # window, so every residual is zero and none survive the filter
    X = np.linspace(0.0, 1.0, 30)
    ds = Dataset(X[:, None], X**2)
    res = residuals(ds, EstimatorConfig(h=0.3), 0.5)
    assert res.N1 == 0


def test_residual_filter_fixture():
    rs = build_residual_set([0.0, 0.2, 0.5], 0.0, 1.0)
    assert rs.N1 == 2
    assert rs.residuals == pytest.approx([0.2, 0.5])


def test_window_monotonicity_in_h():
    rng = np.random.default_rng(8)
    for _ in range(25):
        ds = _random_dataset(rng)
        f1 = estimate_tilde_a(ds, 0.5, EstimatorConfig(h=0.2))
        f2 = estimate_tilde_a(ds, 0.5, EstimatorConfig(h=0.4))
        if f1.status == "bounded" and f2.status == "bounded":
            assert f2.value <= f1.value + 1e-9


def test_affine_equivariance():
    rng = np.random.default_rng(9)
    for _ in range(25):
        ds = _random_dataset(rng)
        m, l = rng.standard_normal(2)
        shifted = Dataset(ds.design, ds.response + m + l * ds.design[:, 0])
        f0 = estimate_tilde_a(ds, 0.5, EstimatorConfig(h=0.3))
        f1 = estimate_tilde_a(shifted, 0.5, EstimatorConfig(h=0.3))
        if f0.status == "bounded":
            assert f1.status == "bounded"
            assert f1.value == pytest.approx(f0.value + m + l * 0.5, abs=1e-9)
            assert f1.slope[0] == pytest.approx(f0.slope[0] + l, abs=1e-9)


def test_scale_equivariance():
    rng = np.random.default_rng(10)
    for _ in range(25):
        ds = _random_dataset(rng)
        lam = float(rng.uniform(0.5, 2.0))
        scaled = Dataset(ds.design, lam * ds.response)
        f0 = estimate_tilde_a(ds, 0.5, EstimatorConfig(h=0.3))
        f1 = estimate_tilde_a(scaled, 0.5, EstimatorConfig(h=0.3))
        if f0.status == "bounded":
            assert f1.value == pytest.approx(lam * f0.value, abs=1e-9)


def test_smoothers_reproduce_constants_and_affine():
    k = biquadratic_kernel(1)
    cfg = EstimatorConfig(h=1.0, h1=1.0, B=100.0)

    def raw_const(pt):
        return LocalFit(3.25, np.zeros(1), "bounded", 1.0, 10)

    def raw_affine(pt):
        return LocalFit(2.0 + 5.0 * float(pt[0]), np.zeros(1), "bounded", 1.0, 10)

    assert smooth_check_a(raw_const, 0.0, cfg, k) == pytest.approx(3.25, abs=1e-9)
    assert smooth_hat_a(raw_const, 0.0, cfg, k) == pytest.approx(3.25, abs=1e-9)
    assert smooth_hat_a(raw_affine, 0.0, cfg, k) == pytest.approx(2.0, abs=1e-9)


def test_smoothers_quadratic_oracle():
    # raw level u^2 about x: intercepts converge to the kernel's scaled
    # second moment (1/7 for the biquadratic on p = 1)
    k = biquadratic_kernel(1)
    cfg = EstimatorConfig(h=1.0, h1=1.0, B=100.0)

    def raw_sq(pt):
        return LocalFit(float(pt[0]) ** 2, np.zeros(1), "bounded", 1.0, 10)

    assert smooth_hat_a(raw_sq, 0.0, cfg, k, resolution=201) == pytest.approx(1 / 7, abs=1e-3)
    assert smooth_check_a(raw_sq, 0.0, cfg, k, resolution=201) == pytest.approx(1 / 7, abs=1e-3)


def test_smoother_threshold_errors():
    k = biquadratic_kernel(1)
    cfg = EstimatorConfig(h=1.0, h1=1.0, B=1.0)

    def raw_big(pt):
        return LocalFit(1000.0, np.zeros(1), "bounded", 1.0, 10)

    with pytest.raises(DegenerateDenominator):
        smooth_check_a(raw_big, 0.0, cfg, k)
    with pytest.raises(SingularDesign):
        smooth_hat_a(raw_big, 0.0, cfg, k)


def test_estimate_curve_rows_and_flat_data():
    rng = np.random.default_rng(14)
    X = rng.uniform(0, 1, 200)
    ds = Dataset(X[:, None], np.full(200, 4.0))
    grid = np.linspace(0.2, 0.8, 34)
    pts = estimate_curve(ds, [np.array([v]) for v in grid], EstimatorConfig(h=0.2), resolution=41)
    assert len(pts) == 34
    for cp in pts:
        assert cp.a_tilde == pytest.approx(4.0, abs=1e-8)
        assert cp.a_smooth == pytest.approx(4.0, abs=1e-8)


def test_orientation_negation():
    rng = np.random.default_rng(15)
    X = rng.uniform(0, 1, 120)
    Y = np.cos(2 * X) + rng.gamma(0.8, 0.4, 120)
    lower = Dataset(X[:, None], Y, orientation="lower")
    upper = Dataset(X[:, None], -Y, orientation="upper")
    grid = [np.array([v]) for v in np.linspace(0.3, 0.7, 7)]
    pl = estimate_curve(lower, grid, EstimatorConfig(h=0.25), resolution=41)
    pu = estimate_curve(upper, grid, EstimatorConfig(h=0.25), resolution=41)
    for a, b in zip(pl, pu):
        assert b.a_tilde == pytest.approx(-a.a_tilde, abs=1e-12)
        assert b.a_smooth == pytest.approx(-a.a_smooth, abs=1e-12)


def test_raw_fitter_cache_is_write_once():
    rng = np.random.default_rng(16)
    ds = _random_dataset(rng)
    fitter = make_raw_fitter(ds, EstimatorConfig(h=0.3))
    a = fitter(np.array([0.5]))
    b = fitter(np.array([0.5]))
    assert a is b


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(h=-1.0)
    with pytest.raises(ValueError):
        EstimatorConfig(h=0.1, h1=0.0)
    ds = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        EstimatorConfig(h=0.1, k_min=2).resolved_k_min(ds)  # below p + 2
