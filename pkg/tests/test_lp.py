from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smartlottery.errors import SolverError
from smartlottery.lp import DenseSimplex, solve_lp


def _check_duals(c, A, senses, b, res):
    y = res.duals
    assert b @ y == pytest.approx(res.objective, abs=1e-6)
    assert np.all(A.T @ y <= c + 1e-7)
    for s, v in zip(senses, y):
        if s == ">":
            assert v >= -1e-9
        elif s == "<":
            assert v <= 1e-9


def test_small_known_lp():
    # min x + y  s.t.  x + 2y >= 4, 3x + y >= 6
    c = np.array([1.0, 1.0])
    A = np.array([[1.0, 2.0], [3.0, 1.0]])
    res = solve_lp(c, A, [">", ">"], [4, 6])
    assert res.status == "optimal"
    assert res.x == pytest.approx([1.6, 1.2])
    assert res.objective == pytest.approx(2.8)
    assert res.duals == pytest.approx([0.4, 0.2])


def test_infeasible_and_unbounded():
    A = np.array([[1.0], [1.0]])
    assert solve_lp([1.0], A, ["<", ">"], [1, 2]).status == "infeasible"
    assert solve_lp([-1.0], np.array([[1.0]]), [">"], [1]).status == "unbounded"


def test_equality_with_negative_rhs():
    res = solve_lp([1.0, 1.0], np.array([[-1.0, -1.0]]), ["="], [-3])
    assert res.status == "optimal" and res.objective == pytest.approx(3.0)
    assert res.duals[0] == pytest.approx(-1.0)


def test_degenerate_redundant_equalities():
    A = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    res = solve_lp([1.0, 2.0, 3.0], A, ["=", "=", "="], [1, 1, 1])
    assert res.status == "optimal" and res.objective == pytest.approx(2.0)
    assert res.x == pytest.approx([0.0, 1.0, 0.0])


def test_dimension_check():
    with pytest.raises(SolverError):
        DenseSimplex(np.zeros((2, 2)), [">"], [1, 1], [0, 0])
    with pytest.raises(SolverError):
        solve_lp([0.0], np.zeros((1, 1)), [">"], [0], backend="glpk")


def test_warm_start_after_adding_columns():
    rng = np.random.default_rng(5)
    A = rng.random((5, 4))
    b = rng.random(5)
    c = rng.random(4) + 1
    lp = DenseSimplex(A, [">"] * 5, b, c)
    first = lp.solve()
    extra = rng.random((5, 3))
    idx = lp.add_columns(extra, [0.1, 0.2, 0.3])
    assert idx == [4, 5, 6]
    second = lp.solve()
    ref = solve_lp(np.r_[c, 0.1, 0.2, 0.3], np.hstack([A, extra]), [">"] * 5, b)
    assert second.objective == pytest.approx(ref.objective, abs=1e-9)
    assert second.objective <= first.objective + 1e-12
    assert len(second.x) == 7


@pytest.mark.needs_scipy
@given(st.integers(0, 2**32 - 1))
def test_random_lps_match_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 8)), int(rng.integers(1, 10))
    A = rng.integers(-3, 4, (m, n)).astype(float)
    b = rng.integers(-5, 6, m).astype(float)
    senses = list(rng.choice(["<", ">", "="], m))
    c = rng.integers(-2, 5, n).astype(float)
    r1 = solve_lp(c, A, senses, b)
    r2 = solve_lp(c, A, senses, b, backend="highs")
    assert r1.status == r2.status
    if r1.status == "optimal":
        assert r1.objective == pytest.approx(r2.objective, abs=1e-7)
        x = r1.x
        assert np.all(x >= -1e-9)
        for row, s, rhs in zip(A @ x, senses, b):
            if s == "<":
                assert row <= rhs + 1e-7
            elif s == ">":
                assert row >= rhs - 1e-7
            else:
                assert row == pytest.approx(rhs, abs=1e-7)
        _check_duals(c, A, senses, b, r1)
        _check_duals(c, A, senses, b, r2)


@pytest.mark.needs_scipy
@given(st.integers(0, 2**32 - 1))
def test_covering_lps_with_many_columns(seed):
    # shaped like a master: cumulative 0/1 rows, one convexity row
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(3, 15)), int(rng.integers(5, 60))
    A = (rng.random((m, n)) < 0.4).astype(float)
    A = np.vstack([A, np.ones(n)])
    w = rng.dirichlet(np.ones(n))
    b = np.r_[A[:-1] @ w * rng.uniform(0.5, 1.0), 1.0]
    c = rng.integers(1, 20, n).astype(float)
    senses = [">"] * m + ["="]
    r1 = solve_lp(c, A, senses, b)
    r2 = solve_lp(c, A, senses, b, backend="highs")
    assert r1.status == r2.status == "optimal"
    assert r1.objective == pytest.approx(r2.objective, rel=1e-9, abs=1e-9)
    _check_duals(c, A, senses, b, r1)
