"""Dense simplex solver: primal answers and dual certificates."""

import numpy as np
import pytest

from ccpkit import LpProblem, solve_lp


def certificate_ok(problem: LpProblem, out, tol=1e-7) -> bool:
    x = out.x
    scale = 1.0 + abs(out.value)
    if problem.A is not None and problem.A.size:
        slack = problem.b - problem.A @ x
        if slack.min() < -tol * scale:
            return False
        if out.dual_ineq.max() > tol:
            return False
        if np.max(np.abs(out.dual_ineq * slack)) > 1e-5 * scale:
            return False
    if problem.E is not None and problem.E.size:
        if np.max(np.abs(problem.E @ x - problem.f)) > tol * scale:
            return False
    lo = problem.lo if problem.lo is not None else np.zeros(x.shape[0])
    hi = problem.hi if problem.hi is not None else np.full(x.shape[0], np.inf)
    if np.any(x < lo - tol * scale) or np.any(x > hi + tol * scale):
        return False
    return out.duality_gap <= 1e-6 and out.reduced_cost_min >= -1e-7


def test_simple_bounded_optimum():
    # min x1 + 2 x2 subject to x1 + x2 >= 1, x >= 0
    p = LpProblem(
        c=np.array([1.0, 2.0]),
        A=np.array([[-1.0, -1.0]]),
        b=np.array([-1.0]),
    )
    out = solve_lp(p)
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0)
    assert np.allclose(out.x, [1.0, 0.0])
    assert out.dual_ineq[0] == pytest.approx(-1.0)
    assert certificate_ok(p, out)


def test_degenerate_face_value():
    p = LpProblem(
        c=np.array([-1.0, -1.0]),
        A=np.array([[1.0, 1.0]]),
        b=np.array([1.0]),
    )
    out = solve_lp(p)
    assert out.status == "optimal"
    assert out.value == pytest.approx(-1.0)
    assert certificate_ok(p, out)


def test_equality_with_box():
    p = LpProblem(
        c=np.array([1.0, 1.0]),
        E=np.array([[1.0, -1.0]]),
        f=np.array([0.5]),
        lo=np.zeros(2),
        hi=np.ones(2),
    )
    out = solve_lp(p)
    assert out.status == "optimal"
    assert out.value == pytest.approx(0.5)
    assert np.allclose(out.x, [0.5, 0.0])
    assert certificate_ok(p, out)


def test_infeasible_detected():
    p = LpProblem(
        c=np.array([1.0]),
        A=np.array([[1.0]]),
        b=np.array([-1.0]),
    )
    assert solve_lp(p).status == "infeasible"


def test_unbounded_detected():
    p = LpProblem(c=np.array([-1.0]))
    assert solve_lp(p).status == "unbounded"


def test_free_variable_via_lo():
    # min x with x >= -3 needs the explicit lower bound
    p = LpProblem(c=np.array([1.0]), lo=np.array([-3.0]))
    out = solve_lp(p)
    assert out.status == "optimal"
    assert out.value == pytest.approx(-3.0)


def test_redundant_rows_keep_zero_multiplier():
    p = LpProblem(
        c=np.array([1.0, 0.0]),
        A=np.array([[-1.0, 0.0], [-1.0, 0.0]]),
        b=np.array([-1.0, -1.0]),
        E=np.array([[0.0, 1.0], [0.0, 1.0]]),
        f=np.array([0.25, 0.25]),
    )
    out = solve_lp(p)
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0)
    assert certificate_ok(p, out)


def test_random_lps_certify():
    rng = np.random.default_rng(42)
    solved = 0
    for _ in range(60):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(0, 5))
        p = LpProblem(
            c=rng.normal(size=n),
            A=rng.normal(size=(m, n)) if m else None,
            b=rng.uniform(0.5, 2.0, size=m) if m else None,
            lo=np.zeros(n),
            hi=rng.uniform(0.5, 3.0, size=n),
        )
        out = solve_lp(p)
        assert out.status == "optimal"
        assert certificate_ok(p, out)
        # optimality against brute-force feasible samples
        best = out.value
        for _ in range(200):
            cand = rng.uniform(0.0, 1.0, size=n) * p.hi
            if m and np.any(p.A @ cand > p.b + 1e-12):
                continue
            assert p.c @ cand >= best - 1e-7 * (1.0 + abs(best))
        solved += 1
    assert solved == 60
