import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull

from convexreg.body import (
    BodyError,
    DegenerateBodyError,
    Ellipsoid,
    HullPolytope,
    LinearImageBody,
    LpBall,
    OuterBody,
    VPolytope,
    ball,
    cross_polytope,
    cube,
    inner_reg,
    linear_image,
    minkowski_diff_body,
    outer_reg,
    polar,
    project,
    random_polytope,
    regular_simplex,
    section,
    simplex_sharp_subspace,
    translate,
)
from convexreg.body.io import BodySpecError, load_body, parse_body
from convexreg.body.ops import unit_simplex_volume
from convexreg.numerics import Subspace, haar_subspace

from helpers import unit_rows

# --- closed-form oracles -------------------------------------------------------


def test_cube_and_cross_polytope_norms(gen):
    X = gen.standard_normal((200, 4))
    C, O = cube(4, 2.0), cross_polytope(4, 2.0)
    assert np.allclose(C.gauge(X), np.abs(X).max(axis=1) / 2)
    assert np.allclose(C.support(X), 2 * np.abs(X).sum(axis=1))
    assert np.allclose(O.gauge(X), np.abs(X).sum(axis=1) / 2)
    assert np.allclose(O.support(X), 2 * np.abs(X).max(axis=1))


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, math.inf])
def test_lp_ball_support_is_dual_norm(gen, p):
    q = 1.0 if p == math.inf else (math.inf if p == 1 else p / (p - 1))
    K = LpBall(3, p, scale=0.5)
    X = gen.standard_normal((100, 3))
    assert np.allclose(K.gauge(X), np.linalg.norm(X, ord=p, axis=1) / 0.5)
    assert np.allclose(K.support(X), 0.5 * np.linalg.norm(X, ord=q, axis=1))


def test_ellipsoid_oracles(gen):
    A = np.array([[2.0, 0.3, 0.0], [0.0, 1.0, 0.2], [0.1, 0.0, 0.5]])
    E = Ellipsoid(A)
    U = gen.standard_normal((50, 3))
    assert np.allclose(E.support(U), np.linalg.norm(U @ A, axis=1))
    assert np.allclose(E.gauge(U), np.linalg.norm(np.linalg.solve(A, U.T).T, axis=1))
    g, Y = E.gauge_subgradient(U)
    assert np.allclose(np.einsum("ij,ij->i", Y, U), g)
    assert np.allclose(polar(E).gauge(Y), 1.0)


def test_scalar_inputs_return_floats():
    K = ball(3, 2.0)
    assert isinstance(K.gauge([1.0, 0.0, 0.0]), float)
    assert K.gauge([2.0, 0.0, 0.0]) == pytest.approx(1.0)
    assert K.radial([0.0, 1.0, 0.0]) == pytest.approx(2.0)
    assert K.contains([0.0, 0.0, 1.99]) and not K.contains([0.0, 0.0, 2.01])


# --- polarity --------------------------------------------------------------------


@pytest.mark.parametrize("make", [lambda: cube(3), lambda: regular_simplex(3), lambda: LpBall(3, 1.5),
                                  lambda: random_polytope(3, 9, 4)])
def test_polar_swaps_support_and_gauge(gen, make):
    K = make()
    P = polar(K)
    U = gen.standard_normal((200, 3))
    assert np.allclose(P.gauge(U), K.support(U), atol=1e-9)
    assert np.allclose(P.support(U), K.gauge(U), atol=1e-9)
    assert np.allclose(polar(P).gauge(U), K.gauge(U), atol=1e-9)


def test_simplex_polar_is_scaled_negative_simplex(gen):
    # with edge sqrt2, <v_i, v_j> = -1/(n+1), so the polar is -(n+1) S
    n = 3
    S = regular_simplex(n)
    U = gen.standard_normal((100, n))
    assert np.allclose(polar(S).support(U), S.gauge(U))
    assert np.allclose(polar(S).gauge(U), S.gauge(-U) / (n + 1))


# --- symmetrisations ----------------------------------------------------------------


def test_outer_and_inner_of_simplex(gen):
    S = regular_simplex(3)
    U = gen.standard_normal((200, 3))
    assert np.allclose(outer_reg(S).support(U), np.maximum(S.support(U), S.support(-U)))
    assert np.allclose(inner_reg(S).gauge(U), np.maximum(S.gauge(U), S.gauge(-U)))
    # K_in sits inside K sits inside K_out
    assert np.all(inner_reg(S).support(U) <= S.support(U) + 1e-12)
    assert np.all(S.support(U) <= outer_reg(S).support(U) + 1e-12)


def test_symmetric_body_is_its_own_regularisation():
    C = cube(3)
    assert outer_reg(C) is C and inner_reg(C) is C


def _circle_max(f, count=20_000):
    """Maximum over the unit circle of f(theta) (vectorised), refined near the best grid point."""
    t = np.linspace(0, 2 * np.pi, count, endpoint=False)
    i = int(np.argmax(f(t)))
    step = 2 * np.pi / count
    res = minimize_scalar(lambda s: -f(np.array([s]))[0], bounds=(t[i] - step, t[i] + step),
                          method="bounded", options={"xatol": 1e-13})
    return -res.fun


def _circle(t):
    return np.column_stack([np.cos(t), np.sin(t)])


def test_outer_gauge_by_descent_matches_dual_formula():
    # without a polyhedral lift the gauge of conv(K u -K) comes from a descent;
    # compare with sup_u <u, x> / h(u)
    Kout = OuterBody(translate(ball(2), [0.4, 0.1]))
    X = unit_rows(np.random.default_rng(3), 2, 20)
    exact = [_circle_max(lambda t, x=x: _circle(t) @ x / Kout.support(_circle(t))) for x in X]
    assert np.allclose(Kout.gauge(X), exact, rtol=1e-9)


def test_inner_support_by_descent_matches_boundary_sweep():
    Kin = inner_reg(translate(ball(2), [0.4, 0.1]))
    U = unit_rows(np.random.default_rng(4), 2, 20)
    exact = [_circle_max(lambda t, u=u: _circle(t) @ u / Kin.gauge(_circle(t))) for u in U]
    assert np.allclose(Kin.support(U), exact, rtol=1e-9)


def test_difference_body_support(gen):
    S = regular_simplex(4)
    D = minkowski_diff_body(S)
    U = gen.standard_normal((100, 4))
    assert np.allclose(D.support(U), S.support(U) + S.support(-U))
    assert D.symmetric


# --- sections and projections -------------------------------------------------------


def test_coordinate_section_and_projection_of_cube(gen):
    C = cube(4)
    H = Subspace(np.eye(4)[:, :2])
    Z = gen.standard_normal((50, 2))
    assert np.allclose(section(C, H).gauge(Z), np.abs(Z).max(axis=1))
    assert np.allclose(project(C, H).support(Z), np.abs(Z).sum(axis=1))
    assert np.allclose(project(C, H).gauge(Z), np.abs(Z).max(axis=1), atol=1e-9)


def test_diagonal_projection_and_section_of_cross_polytope():
    O = cross_polytope(2)
    H = Subspace(np.array([[1.0], [1.0]]) / math.sqrt(2))
    # the cross-polytope meets the diagonal at (1/2, 1/2), so the section is [-1/sqrt2, 1/sqrt2]
    assert section(O, H).radial([1.0]) == pytest.approx(1 / math.sqrt(2))
    # and it projects onto the diagonal with radius h(d) = 1/sqrt2 as well
    assert project(O, H).radial([1.0]) == pytest.approx(1 / math.sqrt(2))


@given(st.integers(3, 6), st.integers(0, 2**32))
def test_sections_of_balls_are_balls(n, seed):
    k = 1 + seed % (n - 1)
    H = haar_subspace(n, k, seed)
    Z = np.random.default_rng(seed).standard_normal((10, k))
    assert np.allclose(section(ball(n), H).gauge(Z), np.linalg.norm(Z, axis=1))
    assert np.allclose(project(ball(n), H).support(Z), np.linalg.norm(Z, axis=1))


@given(st.integers(0, 2**32))
def test_section_is_inside_projection(seed):
    K = random_polytope(4, 10, seed)
    H = haar_subspace(4, 2, seed)
    Z = unit_rows(np.random.default_rng(seed), 2, 20)
    assert np.all(section(K, H).radial(Z) <= project(K, H).radial(Z) + 1e-9)


def test_projection_of_polar_is_polar_of_section(gen):
    K = random_polytope(4, 12, 9)
    H = haar_subspace(4, 2, 2)
    Z = gen.standard_normal((30, 2))
    assert np.allclose(project(polar(K), H).support(Z), section(K, H).gauge(Z), atol=1e-9)


# --- maps -------------------------------------------------------------------------


def test_linear_image_oracles(gen):
    T = np.array([[1.0, 0.5, 0.0], [0.0, 2.0, 0.3], [0.2, 0.0, 1.0]])
    K = LpBall(3, 3.0)
    TK = linear_image(K, T)
    assert isinstance(TK, LinearImageBody)
    X = gen.standard_normal((100, 3))
    assert np.allclose(TK.gauge(X @ T.T), K.gauge(X))
    assert np.allclose(TK.support(X), K.support(X @ T))


def test_linear_image_subgradient(gen):
    T = np.array([[1.0, 0.5, 0.0], [0.0, 2.0, 0.3], [0.2, 0.0, 1.0]])
    TK = linear_image(LpBall(3, 3.0), T)
    X = gen.standard_normal((100, 3))
    g, Y = TK.gauge_subgradient(X)
    assert np.allclose(g, TK.gauge(X))
    assert np.allclose(np.einsum("ij,ij->i", Y, X), g)
    assert np.allclose(TK.support(Y), 1.0)


def test_linear_image_of_polytope_stays_polytope():
    T = np.diag([1.0, 2.0, 3.0])
    assert isinstance(linear_image(regular_simplex(3), T), VPolytope)
    with pytest.raises(BodyError):
        linear_image(regular_simplex(3), np.diag([1.0, 0.0, 1.0]))


def test_translate_support_shifts_linearly(gen):
    z = np.array([0.1, -0.2, 0.05])
    for K in (ball(3), cube(3)):
        U = gen.standard_normal((50, 3))
        assert np.allclose(translate(K, z).support(U), K.support(U) + U @ z)
    T = translate(ball(3), z)
    X = unit_rows(gen, 3, 50)
    B = X / T.gauge(X)[:, None]
    assert np.allclose(np.linalg.norm(B - z, axis=1), 1.0)


def test_translate_must_keep_origin_inside():
    with pytest.raises(BodyError):
        translate(regular_simplex(2), [5.0, 0.0])


# --- concrete families ---------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 5])
def test_regular_simplex_geometry(n):
    V = regular_simplex(n).vertices
    assert np.allclose(V.mean(axis=0), 0, atol=1e-14)
    D = np.linalg.norm(V[:, None] - V[None], axis=2)
    assert np.allclose(D[~np.eye(n + 1, dtype=bool)], math.sqrt(2))
    assert ConvexHull(V).volume == pytest.approx(unit_simplex_volume(n), rel=1e-12)


@pytest.mark.parametrize("n, k", [(3, 1), (4, 2), (5, 3)])
def test_sharp_subspace_contains_vertices_and_rest_average(n, k):
    H = simplex_sharp_subspace(n, k)
    V = regular_simplex(n).vertices
    P = H.projector()
    assert np.allclose(P @ V[:k].T, V[:k].T)
    w = V[k:].mean(axis=0)
    assert np.allclose(P @ w, w)
    with pytest.raises(ValueError):
        simplex_sharp_subspace(n, n)


def test_random_polytope_is_deterministic_and_centred():
    a, b = random_polytope(4, 10, 5), random_polytope(4, 10, 5)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.allclose(a.vertices.mean(axis=0), 0)
    assert not np.array_equal(a.vertices, random_polytope(4, 10, 6).vertices)


@pytest.mark.parametrize("n", [2, 3])
def test_hull_polytope_matches_vertex_polytope(gen, n):
    P = gen.standard_normal((40, n))
    P -= P.mean(axis=0)
    H, V = HullPolytope(P), VPolytope(P)
    X = gen.standard_normal((100, n))
    assert np.allclose(H.gauge(X), V.gauge(X), atol=1e-9)
    assert np.allclose(H.support(X), V.support(X))


def test_degenerate_bodies_are_rejected():
    with pytest.raises(DegenerateBodyError):
        VPolytope([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    with pytest.raises(DegenerateBodyError):
        VPolytope([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(BodyError):
        HullPolytope(np.eye(5))
    with pytest.raises(DegenerateBodyError):
        Ellipsoid(np.diag([1.0, 0.0]))


# --- invariants --------------------------------------------------------------------------


bodies = st.sampled_from(["cube", "cross", "simplex", "random", "lp", "ellipsoid", "image"])


def _make(kind: str, n: int, seed: int):
    if kind == "cube":
        return cube(n)
    if kind == "cross":
        return cross_polytope(n)
    if kind == "simplex":
        return regular_simplex(n)
    if kind == "random":
        return random_polytope(n, 2 * n + 2, seed)
    if kind == "lp":
        return LpBall(n, 1.5)
    T = np.eye(n) + 0.3 * np.random.default_rng(seed).standard_normal((n, n))
    if kind == "ellipsoid":
        return Ellipsoid(T)
    return linear_image(LpBall(n, 4.0), T)


@given(bodies, st.integers(2, 5), st.integers(0, 2**32), st.floats(0.01, 100.0))
def test_oracles_are_positively_homogeneous(kind, n, seed, lam):
    K = _make(kind, n, seed)
    X = np.random.default_rng(seed).standard_normal((8, n))
    assert np.allclose(K.gauge(lam * X), lam * K.gauge(X), rtol=1e-9)
    assert np.allclose(K.support(lam * X), lam * K.support(X), rtol=1e-9)


@given(bodies, st.integers(2, 5), st.integers(0, 2**32))
def test_oracles_are_subadditive(kind, n, seed):
    K = _make(kind, n, seed)
    g = np.random.default_rng(seed)
    X, Y = g.standard_normal((8, n)), g.standard_normal((8, n))
    assert np.all(K.gauge(X + Y) <= K.gauge(X) + K.gauge(Y) + 1e-9)
    assert np.all(K.support(X + Y) <= K.support(X) + K.support(Y) + 1e-9)


@given(bodies, st.integers(2, 5), st.integers(0, 2**32))
def test_boundary_points_satisfy_support_inequality(kind, n, seed):
    # x / p(x) lies in K, so <u, x> <= p(x) h(u) for every u
    K = _make(kind, n, seed)
    g = np.random.default_rng(seed)
    X, U = g.standard_normal((8, n)), g.standard_normal((8, n))
    lhs = X @ U.T
    rhs = K.gauge(X)[:, None] * K.support(U)[None, :]
    assert np.all(lhs <= rhs + 1e-9)
    assert np.all(K.r_in * np.linalg.norm(X, axis=1) <= K.radial(X) * np.linalg.norm(X, axis=1) ** 2 + 1e-9)


# --- JSON format ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "node",
    [
        {"type": "ball", "n": 3, "radius": 2},
        {"type": "lp_ball", "n": 3, "p": 1.5},
        {"type": "cube", "n": 3},
        {"type": "cross_polytope", "n": 3, "a": 0.5},
        {"type": "ellipsoid", "matrix": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]},
        {"type": "simplex", "n": 3},
        {"type": "random_polytope", "n": 3, "m": 8, "seed": 1},
        {"type": "vpolytope", "vertices": [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]},
        {"op": "polar", "body": {"type": "simplex", "n": 3}},
        {"op": "outer", "body": {"type": "simplex", "n": 3}},
        {"op": "inner", "body": {"type": "simplex", "n": 3}},
        {"op": "difference", "body": {"type": "simplex", "n": 3}},
        {"op": "linear", "matrix": [[1, 0, 0], [0, 2, 0], [0, 0, 1]], "body": {"type": "cube", "n": 3}},
        {"op": "translate", "shift": [0.1, 0, 0], "body": {"type": "ball", "n": 3}},
    ],
)
def test_parse_three_dimensional_bodies(node):
    K = parse_body(node)
    assert K.dim == 3
    assert K.gauge([0.0, 0.0, 0.0]) == 0.0


def test_parse_subspace_nodes():
    assert parse_body({"op": "section", "subspace": {"haar": {"k": 2, "seed": 1}}, "body": {"type": "cube", "n": 4}}).dim == 2
    assert parse_body({"op": "project", "subspace": {"sharp": {"k": 1}}, "body": {"type": "simplex", "n": 3}}).dim == 1
    node = {"op": "section", "subspace": {"basis": [[1], [0], [0]]}, "body": {"type": "cube", "n": 3}}
    assert parse_body(node).gauge([0.5]) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "node, pointer",
    [
        ({"type": "ball"}, "/"),
        ({"op": "polar", "body": {"type": "ball"}}, "/body"),
        ({"type": "cube", "n": 2.5}, "/n"),
        ({"type": "ball", "n": 0}, "/n"),
        ({"type": "ball", "n": 3, "radius": -1}, "/radius"),
        ({"type": "lp_ball", "n": 3, "p": 0.5}, "/p"),
        ({"type": "spiral", "n": 3}, "/type"),
        ({"op": "twist", "body": {"type": "cube", "n": 2}}, "/op"),
        ({"op": "polar"}, "/"),
        ({"type": "cube", "op": "polar", "n": 2}, "/"),
        ({"op": "linear", "matrix": [[1, 0]], "body": {"type": "cube", "n": 2}}, "/matrix"),
        ({"op": "translate", "shift": [0, 0, 0], "body": {"type": "cube", "n": 2}}, "/shift"),
        ({"op": "section", "subspace": {"haar": {"k": 3, "seed": 0}}, "body": {"type": "cube", "n": 3}}, "/subspace/haar/k"),
        ({"op": "section", "subspace": {}, "body": {"type": "cube", "n": 3}}, "/subspace"),
        ({"op": "polar", "body": {"op": "outer", "body": {"type": "vpolytope", "vertices": "x"}}}, "/body/body/vertices"),
        ({"type": "random_polytope", "n": 3, "m": 2, "seed": 0}, "/m"),
        ({"type": "vpolytope", "vertices": [[1, 1], [2, 1], [1, 2]]}, "/"),
        ([1, 2], "/"),
    ],
)
def test_parse_errors_carry_pointer(node, pointer):
    with pytest.raises(BodySpecError) as info:
        parse_body(node)
    assert info.value.pointer == pointer
    assert str(info.value).startswith(pointer + ":")


def test_load_body_from_path_and_string(tmp_path):
    node = {"type": "cube", "n": 2, "a": 2.0}
    path = tmp_path / "cube.json"
    path.write_text(json.dumps(node))
    for source in (path, str(path), json.dumps(node), node):
        assert load_body(source).gauge([2.0, 0.0]) == pytest.approx(1.0)
