"""LP solver tests: hand cases, brute-force vertex oracle, certificates."""

import itertools

import numpy as np
import pytest

from frontier.lp import LinearProgram, LpOutcome, solve_lp


def brute_force_max(A, b, c, tol=1e-9):
    """Independent oracle: enumerate all k-subsets of constraints, solve
    each square active system, keep feasible candidates, take the max.
    Valid when the LP has a vertex optimum (bounded, feasible)."""
    m, k = A.shape
    best = None
    for rows in itertools.combinations(range(m), k):
        S = A[list(rows)]
        if abs(np.linalg.det(S)) < 1e-12:
            continue
        z = np.linalg.solve(S, b[list(rows)])
        if np.all(A @ z <= b + tol):
            val = float(c @ z)
            if best is None or val > best:
                best = val
    return best


def test_tighter_constraint_binds():
    out = solve_lp(LinearProgram(np.array([[1.0], [1.0]]), np.array([3.0, 5.0]), np.array([1.0])))
    assert out.status == "optimal"
    assert out.value == pytest.approx(3.0, abs=1e-9)
    assert out.solution[0] == pytest.approx(3.0, abs=1e-9)


def test_two_constraint_intersection():
    lp = LinearProgram(
        np.array([[1.0, -0.5], [1.0, 0.5]]), np.array([1.0, 3.0]), np.array([1.0, 0.0])
    )
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.solution == pytest.approx([2.0, 2.0], abs=1e-9)


def test_unbounded_with_certifying_ray():
    A = np.array([[1.0, 1.0], [1.0, 2.0]])
    lp = LinearProgram(A, np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    out = solve_lp(lp)
    assert out.status == "unbounded"
    assert np.all(A @ out.ray <= 1e-9)
    assert out.ray @ lp.objective > 1e-12


def test_infeasible():
    lp = LinearProgram(np.array([[1.0], [-1.0]]), np.array([0.0, -1.0]), np.array([1.0]))
    assert solve_lp(lp).status == "infeasible"


def test_no_constraints():
    assert solve_lp(LinearProgram(np.zeros((0, 2)), np.zeros(0), np.zeros(2))).status == "optimal"
    out = solve_lp(LinearProgram(np.zeros((0, 2)), np.zeros(0), np.array([1.0, 0.0])))
    assert out.status == "unbounded"


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        LinearProgram(np.array([[np.nan]]), np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        LinearProgram(np.ones((2, 2)), np.ones(3), np.ones(2))


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(1234)
    checked = 0
    for _ in range(300):
        m = int(rng.integers(2, 13))
        k = int(rng.integers(1, 4))
        A = rng.standard_normal((m, k))
        b = rng.standard_normal(m) + 1.0
        c = rng.standard_normal(k)
        out = solve_lp(LinearProgram(A, b, c))
        if out.status == "optimal":
            oracle = brute_force_max(A, b, c)
            assert oracle is not None
            assert out.value == pytest.approx(oracle, abs=1e-9)
            assert np.all(A @ out.solution <= b + 1e-9)
            checked += 1
        elif out.status == "unbounded":
            assert np.all(A @ out.ray <= 1e-9)
            assert out.ray @ c > 0
    assert checked > 100  # the generator produces plenty of bounded cases


def test_deterministic_bit_identical():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((20, 3))
    b = rng.standard_normal(20) + 1.0
    c = rng.standard_normal(3)
    lp = LinearProgram(A, b, c)
    o1 = solve_lp(lp)
    o2 = solve_lp(lp)
    assert o1.status == o2.status
    if o1.status == "optimal":
        assert np.array_equal(o1.solution, o2.solution)
        assert o1.value == o2.value


def test_outcome_dataclass_shape():
    out = LpOutcome(status="infeasible")
    assert out.solution is None and out.value is None and out.ray is None
