"""Hill-type estimators of the end-point tail functions from the smallest
windowed frontier residuals.

With residuals ranked ascending 0 < e_(1) <= ... <= e_(N1) and a threshold
r, the tail exponent and constant are

    c_hat = 1 / ( log e_(r+1) - (1/r) * sum_{i<=r} log e_(i) )
    b_hat = (r / N1) * e_(r+1) ** (-c_hat)

local conditional-likelihood analogues of the classical tail-index
estimator, applied at the lower end of the residual distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpacings
from .estimators import ResidualSet


@dataclass(frozen=True)
class TailParams:
    b_hat: float
    c_hat: float
    r: int
    N1: int

    def __post_init__(self):
        if not (1 <= self.r <= self.N1 - 1):
            raise ValueError("threshold r must satisfy 1 <= r <= N1 - 1")
        if not (self.b_hat > 0 and self.c_hat > 0):
            raise ValueError("tail parameters must be positive")


def select_r(N1: int, fraction: float = 0.9) -> int:
    """Smallest integer strictly greater than fraction * N1, clamped so
    that the (r+1)-th order statistic exists."""
    if N1 < 2:
        raise ValueError("at least two residuals are needed")
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must lie in (0, 1)")
    # the 1e-9 nudge keeps exact integer products (0.9 * 20 = 18) from
    # rounding down a notch in floating point
    r = int(math.floor(fraction * N1 + 1e-9)) + 1
    return min(r, N1 - 1)


def hill_estimate(res: ResidualSet, r: int) -> TailParams:
    """Tail parameters from the r smallest residuals and the (r+1)-th.

    Raises DegenerateSpacings when the log bracket is non-positive (tied
    or non-increasing residuals make the exponent undefined).
    """
    if res.N1 < 2:
        raise ValueError("at least two residuals are needed")
    if not (1 <= r <= res.N1 - 1):
        raise ValueError("threshold r must satisfy 1 <= r <= N1 - 1")
    logs = np.log(res.residuals)
    bracket = float(logs[r] - np.mean(logs[:r]))
    if bracket <= 0.0:
        raise DegenerateSpacings("non-positive log spacing; residuals unusable here")
    c_hat = 1.0 / bracket
    b_hat = (r / res.N1) * float(res.residuals[r]) ** (-c_hat)
    return TailParams(b_hat=b_hat, c_hat=c_hat, r=r, N1=res.N1)
