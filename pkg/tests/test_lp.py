import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from convexreg.body import lift as lifts
from convexreg.lp import (
    InfeasibleError,
    LinearProgram,
    Status,
    SupportCache,
    UnboundedError,
    lp_solve,
    solve,
)


def _oracle(lp: LinearProgram):
    bounds = [(0, None) if nn else (None, None) for nn in lp.nonneg]
    res = linprog(-lp.c, A_ub=lp.A_ub if lp.b_ub.size else None, b_ub=lp.b_ub if lp.b_ub.size else None,
                  A_eq=lp.A_eq if lp.b_eq.size else None, b_eq=lp.b_eq if lp.b_eq.size else None,
                  bounds=bounds, method="highs")
    return res


def test_textbook_lp():
    # max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0  ->  36 at (2, 6)
    lp = LinearProgram([3, 5], A_ub=[[1, 0], [0, 2], [3, 2]], b_ub=[4, 12, 18], nonneg=[True, True])
    sol = solve(lp)
    assert sol.status is Status.OPTIMAL
    assert sol.value == pytest.approx(36.0, abs=1e-12)
    assert np.allclose(sol.x, [2, 6])
    # complementary slackness: the first constraint is slack
    assert sol.dual[0] == pytest.approx(0.0, abs=1e-12)
    assert sol.dual @ lp.b_ub == pytest.approx(36.0)


def test_equality_constraints_and_free_variables():
    lp = LinearProgram([1, 1, 0], A_ub=[[1, 0, 0], [0, 1, 0]], b_ub=[1, 2], A_eq=[[1, 1, 1]], b_eq=[0])
    assert solve(lp).value == pytest.approx(3.0)
    lp = LinearProgram([1, 1, 0], A_ub=[[0, 1, 0]], b_ub=[2], A_eq=[[1, 1, 1]], b_eq=[0])
    with pytest.raises(UnboundedError):
        solve(lp)
    lp = LinearProgram([1, 1, 0], A_ub=[[1, 0, 0], [0, 1, 0], [0, 0, -1]], b_ub=[1, 2, 1], A_eq=[[1, 1, 1]], b_eq=[0])
    sol = solve(lp)
    assert sol.value == pytest.approx(1.0)
    assert sol.x.sum() == pytest.approx(0.0, abs=1e-12)


def test_infeasible_and_unbounded_statuses():
    lp = LinearProgram([1.0], A_ub=[[1.0], [-1.0]], b_ub=[-1.0, -1.0])
    assert lp_solve(lp).status is Status.INFEASIBLE
    with pytest.raises(InfeasibleError):
        solve(lp)
    lp = LinearProgram([1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0], nonneg=[True, True])
    assert lp_solve(lp).status is Status.UNBOUNDED


def test_degenerate_vertex_does_not_cycle():
    # Beale's classic cycling example for the textbook Dantzig rule
    c = np.array([0.75, -150, 0.02, -6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1])
    lp = LinearProgram(c, A_ub=A, b_ub=b, nonneg=[True] * 4)
    sol = solve(lp)
    assert sol.value == pytest.approx(0.05, abs=1e-12)


def test_invalid_lp_data():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.inf])


@given(st.integers(1, 5), st.integers(0, 2**32))
def test_random_bounded_lps_match_reference(n, seed):
    g = np.random.default_rng(seed)
    m = n + g.integers(1, 6)
    A = g.standard_normal((m, n))
    # box rows keep the region bounded; b > 0 keeps 0 feasible
    A = np.vstack([A, np.eye(n), -np.eye(n)])
    b = np.concatenate([g.uniform(0.5, 2.0, m), np.full(2 * n, 3.0)])
    c = g.standard_normal(n)
    lp = LinearProgram(c, A_ub=A, b_ub=b)
    sol = solve(lp)
    ref = _oracle(lp)
    assert sol.value == pytest.approx(-ref.fun, rel=1e-9, abs=1e-9)
    assert np.all(A @ sol.x <= b + 1e-9)


def test_support_cache_matches_vertex_enumeration(gen):
    V = gen.standard_normal((12, 3))
    L = lifts.vpoly(V)
    U = gen.standard_normal((500, 3))
    assert np.allclose(L.support(U), (U @ V.T).max(axis=1), atol=1e-10)
    vals, P = L.support_points(U[:20])
    assert np.allclose(np.einsum("ij,ij->i", U[:20], P), vals)


def test_support_cache_reuses_certified_bases(gen):
    # the cube has 8 vertices: at most 8 distinct optimal bases are ever needed
    cache = SupportCache(A_ub=np.vstack([np.eye(3), -np.eye(3)]), b_ub=np.ones(6))
    U = gen.standard_normal((2000, 3))
    assert np.allclose(cache.maximize(U), np.abs(U).sum(axis=1))
    assert cache.solves <= 8


def test_support_cache_reports_unbounded_direction():
    cache = SupportCache(A_ub=np.array([[1.0, 0.0], [-1.0, 0.0]]), b_ub=np.ones(2))
    with pytest.raises(UnboundedError):
        cache.maximize(np.array([[0.0, 1.0]]))
