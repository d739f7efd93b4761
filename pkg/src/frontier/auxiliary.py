"""Conventional auxiliary estimators feeding the bandwidth selector:
local-cubic curvature of the conditional mean and a kernel density
estimate of the design intensity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDesign
from .estimators import Dataset
from .kernels import Kernel, sphere_content


@dataclass(frozen=True)
class CurvatureEstimate:
    second_derivative: float
    bandwidth_used: float


@dataclass(frozen=True)
class DensityInfo:
    g_hat: float
    w_hat: float
    p: int
    floored: bool = False

    def __post_init__(self):
        if not (self.g_hat > 0 and self.w_hat > 0):
            raise ValueError("density estimates must be positive")


def local_cubic_second_derivative(
    data: Dataset, x: float, bandwidth: float, kernel: Kernel
) -> CurvatureEstimate:
    """Second derivative of the conditional mean by weighted cubic fitting.

    Works under the assumption that the error law does not move with the
    covariate, so the mean curve and the frontier share their curvature;
    univariate designs only.  Raises SingularDesign when fewer than five
    points carry weight or the windowed design is degenerate.
    """
    if data.p != 1:
        raise ValueError("local cubic smoothing is implemented for p = 1")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    t = (data.design[:, 0] - float(x)) / bandwidth
    w = np.asarray(kernel.evaluate(t), dtype=float)
    keep = w > 0
    if int(np.count_nonzero(keep)) < 5:
        raise SingularDesign("fewer than five points in the curvature window")
    tk = t[keep]
    yk = data.envelope_response[keep]
    sw = np.sqrt(w[keep])
    design = np.column_stack([np.ones_like(tk), tk, tk**2, tk**3]) * sw[:, None]
    ((coef), _, rank, _) = np.linalg.lstsq(design, yk * sw, rcond=None)
    if rank < 4:
        raise SingularDesign("degenerate design in the curvature window")
    return CurvatureEstimate(
        second_derivative=float(2.0 * coef[2] / bandwidth**2),
        bandwidth_used=float(bandwidth),
    )


def kde_density(design: np.ndarray, x: float, kernel: Kernel) -> DensityInfo:
    """Kernel density estimate of the design at x with the normal
    reference bandwidth 1.06 * sigma_hat * n^(-1/5) (univariate), plus the
    effective local intensity w_hat = w(p) * g_hat.

    A vanishing estimate is floored at 1e-12 and flagged so downstream
    divisions stay finite.
    """
    pts = np.asarray(design, dtype=float)
    if pts.ndim == 2:
        if pts.shape[1] != 1:
            raise ValueError("density estimation is implemented for p = 1")
        pts = pts[:, 0]
    n = len(pts)
    if n < 2:
        raise ValueError("at least two design points are needed")
    sigma = float(np.std(pts, ddof=1))
    bw = 1.06 * sigma * n ** (-0.2)
    if bw <= 0:
        bw = 1e-6
    g = float(np.mean(kernel.evaluate((float(x) - pts) / bw)) / bw)
    floored = g < 1e-12
    if floored:
        g = 1e-12
    return DensityInfo(g_hat=g, w_hat=sphere_content(1) * g, p=1, floored=floored)
