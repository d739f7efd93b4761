"""Small dense linear programs: maximise a linear objective over free
variables subject to <= inequality constraints, with reliable
unboundedness detection.

The solver runs a revised simplex on the dual (few rows, many columns)
with Bland's rule, so identical inputs give bit-identical outcomes.
Unbounded problems come with a certifying ray r satisfying A r <= 0 and
c.r > 0, along which the objective increases from any feasible point
without violating a constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import NumericalFailure

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LinearProgram:
    """maximise objective.z  subject to  constraint_matrix @ z <= constraint_rhs."""

    constraint_matrix: np.ndarray  # (m, k)
    constraint_rhs: np.ndarray  # (m,)
    objective: np.ndarray  # (k,)

    def __post_init__(self):
        A = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.constraint_rhs, dtype=float)
        c = np.asarray(self.objective, dtype=float)
        if A.ndim != 2:
            raise ValueError("constraint matrix must be two-dimensional")
        if b.shape != (A.shape[0],) or c.shape != (A.shape[1],):
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "constraint_matrix", np.ascontiguousarray(A))
        object.__setattr__(self, "constraint_rhs", np.ascontiguousarray(b))
        object.__setattr__(self, "objective", np.ascontiguousarray(c))


@dataclass(frozen=True)
class LpOutcome:
    status: str  # "optimal" | "unbounded" | "infeasible"
    solution: np.ndarray | None = None  # (k,) when optimal
    value: float | None = None  # objective at the optimum
    ray: np.ndarray | None = None  # certifying ray when unbounded


def solve_lp(lp: LinearProgram, *, known_feasible: bool = False, tol: float = 1e-9) -> LpOutcome:
    """Solve a small dense LP.

    ``known_feasible=True`` skips the auxiliary feasibility solve when the
    caller can guarantee a feasible point exists (the frontier LPs always
    can), so a dual-infeasible outcome maps straight to "unbounded".

    Raises NumericalFailure when pivoting exceeds the 50*(m+p) iteration
    cap or a basis turns numerically singular.
    """
    A = lp.constraint_matrix
    b = lp.constraint_rhs
    c = lp.objective
    m, k = A.shape
    max_iter = 50 * (m + max(k - 1, 1))

    st, z, val, ray, _ = _accel.simplex_max(A, b, c, known_feasible, tol, max_iter)
    if st == _accel.LP_OPTIMAL:
        return LpOutcome(OPTIMAL, solution=z, value=float(val))
    if st == _accel.LP_INFEASIBLE:
        return LpOutcome(INFEASIBLE)
    if st == _accel.LP_UNBOUNDED:
        if known_feasible:
            return LpOutcome(UNBOUNDED, ray=ray)
        # classify: maximise the slack margin t in  A z + t*1 <= b, which is
        # always feasible; a nonnegative (or unbounded) margin means the
        # original constraints admit a point.
        A_aux = np.hstack([A, np.ones((m, 1))])
        c_aux = np.zeros(k + 1)
        c_aux[k] = 1.0
        st2, z2, val2, _, _ = _accel.simplex_max(A_aux, b, c_aux, True, tol, max_iter + 50)
        if st2 == _accel.LP_OPTIMAL:
            if val2 < -tol:
                return LpOutcome(INFEASIBLE)
            return LpOutcome(UNBOUNDED, ray=ray)
        if st2 == _accel.LP_UNBOUNDED:
            return LpOutcome(UNBOUNDED, ray=ray)
        raise NumericalFailure("feasibility probe degenerated")
    if st == _accel.LP_ITERATION_LIMIT:
        raise NumericalFailure(f"simplex exceeded the {max_iter}-iteration cap")
    raise NumericalFailure("simplex hit a numerically singular basis")
