import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from convexreg.body import ball, cube, regular_simplex, translate
from convexreg.body.io import BodySpecError
from convexreg.functional import (
    FunctionError,
    GaussianFn,
    IndicatorFn,
    LpExpFn,
    MinFn,
    ShiftCenterFn,
    ball_body,
    ball_body_out_hull,
    ball_body_radial,
    ball_body_radial_batch,
    ball_body_radial_membership,
    delta_in,
    delta_out,
    delta_zero,
    functional_projection,
    integral_on_subspace,
    lemma631_quantities,
    level_body,
    level_body_radial,
    level_body_radial_batch,
    load_function,
    parse_function,
    restrict,
)
from convexreg.numerics import RngStream, Subspace, haar_subspace

from helpers import unit_rows, within_sigma

COV = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 0.5]])


def gaussian_kp_radial(cov, p, U):
    q = np.einsum("ij,jk,ik->i", U, np.linalg.inv(cov), U)
    return (p * math.gamma(p / 2) * 2 ** (p / 2 - 1)) ** (1 / p) / np.sqrt(q)


def lp_exp_kp_radial(a, p, U):
    # int_0^inf p r^{p-1} exp(-s r^a) dr = p Gamma(p/a) / (a s^{p/a})
    s = np.sum(np.abs(U) ** a, axis=1)
    return (p * math.gamma(p / a) / a) ** (1 / p) * s ** (-1 / a)


# --- closed forms for ball and level bodies ------------------------------------------


@pytest.mark.parametrize("p", [1.0, 2.0, 3.5, 8.0])
def test_gaussian_ball_body_radial_closed_form(gen, p):
    f = GaussianFn(COV)
    U = unit_rows(gen, 3, 40)
    exact = gaussian_kp_radial(COV, p, U)
    assert np.allclose(ball_body_radial_batch(f, p, U), exact, rtol=1e-9)
    assert ball_body_radial(f, p, U[0]) == pytest.approx(exact[0], rel=1e-9)


@pytest.mark.parametrize("a, p", [(1.0, 2.0), (1.5, 3.0), (3.0, 1.0)])
def test_lp_exp_ball_body_radial_closed_form(gen, a, p):
    f = LpExpFn(3, a)
    U = unit_rows(gen, 3, 40)
    assert np.allclose(ball_body_radial_batch(f, p, U), lp_exp_kp_radial(a, p, U), rtol=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 6.0])
def test_gaussian_level_body_radial_closed_form(gen, p):
    f = GaussianFn(COV)
    U = unit_rows(gen, 3, 40)
    q = np.einsum("ij,jk,ik->i", U, np.linalg.inv(COV), U)
    exact = np.sqrt(2 * (p - 1) / q)
    assert np.allclose(level_body_radial_batch(f, p, U), exact, rtol=1e-12)
    assert level_body_radial(f, p, U[0]) == pytest.approx(exact[0], rel=1e-9)
    with pytest.raises(ValueError):
        level_body_radial(f, 1.0, U[0])


def test_indicator_ball_body_is_the_body(gen):
    K = translate(regular_simplex(3), [0.05, 0.0, -0.02])
    f = IndicatorFn(K)
    U = unit_rows(gen, 3, 10)
    for p in (1.0, 3.0):
        assert ball_body(f, p) is K
        for u in U:
            assert ball_body_radial_membership(f, p, u) == pytest.approx(K.radial(u), rel=1e-12)


def test_ball_body_oracle_matches_radial(gen):
    f = GaussianFn(COV)
    K = ball_body(f, 3.0)
    U = unit_rows(gen, 3, 20)
    assert np.allclose(K.radial(U), gaussian_kp_radial(COV, 3.0, U), rtol=1e-9)
    assert K.r_in > 0
    L = level_body(f, 3.0)
    assert np.allclose(L.radial(U), level_body_radial_batch(f, 3.0, U))


def test_out_hull_approaches_from_inside():
    f = GaussianFn(np.eye(2))
    r = gaussian_kp_radial(np.eye(2), 2.0, np.array([[1.0, 0.0]]))[0]
    H = ball_body_out_hull(f, 2.0, n_directions=2000, rng=1)
    X = unit_rows(np.random.default_rng(0), 2, 200)
    rad = H.radial(X)
    assert np.all(rad <= r * (1 + 1e-9))
    assert np.all(rad >= r * (1 - 1e-4))


# --- ball-body monotonicity -----------------------------------------------------------------

functions = st.sampled_from(["gauss", "lp1.5", "lp3", "shift"])


def _fn(kind: str, n: int):
    if kind == "gauss":
        return GaussianFn(np.diag(np.linspace(0.5, 2.0, n)))
    if kind == "lp1.5":
        return LpExpFn(n, 1.5)
    if kind == "lp3":
        return LpExpFn(n, 3.0)
    return ShiftCenterFn(LpExpFn(n, 2.0), np.linspace(-0.4, 0.6, n))


@given(functions, st.integers(2, 4), st.floats(1.0, 6.0), st.floats(1.05, 2.0), st.integers(0, 2**32))
def test_ball_bodies_nest_both_ways(kind, n, p, ratio, seed):
    # rho_p is the L^p norm of a variable with tail f(r xi), so it grows with p,
    # while Gamma(p+1)^{-1/p} rho_p shrinks because that tail is log-concave
    f = _fn(kind, n)
    q = p * ratio
    U = unit_rows(np.random.default_rng(seed), n, 6)
    rp, rq = ball_body_radial_batch(f, p, U), ball_body_radial_batch(f, q, U)
    assert np.all(rp <= rq * (1 + 1e-8))
    assert np.all(rq / math.gamma(q + 1) ** (1 / q) <= rp / math.gamma(p + 1) ** (1 / p) * (1 + 1e-8))


# --- operators ---------------------------------------------------------------------------


def test_delta_out_fixes_symmetric_functions(gen):
    for f in (GaussianFn(COV), LpExpFn(3, 1.5)):
        g = delta_out(f)
        assert isinstance(g, MinFn) and g.symmetric
        X = gen.standard_normal((30, 3))
        assert np.allclose(g.phi(X), f.phi(X), rtol=1e-8, atol=1e-10)


def test_delta_out_of_shifted_function_dominates_and_is_symmetric(gen):
    f = ShiftCenterFn(LpExpFn(2, 2.0), [0.5, -0.3])
    g = delta_out(f)
    X = gen.standard_normal((30, 2))
    # exp(-phi_out) >= sqrt(f(x) f(-x)) by taking x1 = x2 = x
    assert np.all(g.phi(X) <= 0.5 * (f.phi(X) + f.phi(-X)) + 1e-9)
    assert np.allclose(g.phi(X), g.phi(-X), rtol=1e-7, atol=1e-9)
    assert g.phi(np.zeros(2)) == pytest.approx(0.0, abs=1e-10)


def test_delta_zero_of_gaussian_doubles_covariance(gen):
    X = gen.standard_normal((30, 3))
    assert np.allclose(delta_zero(GaussianFn(COV)).phi(X), GaussianFn(2 * COV).phi(X), rtol=1e-8)


def test_delta_in_takes_the_worse_side(gen):
    f = ShiftCenterFn(LpExpFn(3, 2.0), [0.5, -0.3, 0.1])
    X = gen.standard_normal((30, 3))
    assert np.allclose(delta_in(f).phi(X), np.maximum(f.phi(X), f.phi(-X)))


def test_indicator_operators_become_bodies(gen):
    S = regular_simplex(3)
    f = IndicatorFn(S)
    X = gen.standard_normal((50, 3))
    out = delta_out(f)
    assert isinstance(out, IndicatorFn)
    # (K - K)/2 has support (h(u) + h(-u)) / 2
    assert np.allclose(out.body.support(X), 0.5 * (S.support(X) + S.support(-X)))
    assert np.allclose(delta_zero(f).body.support(X), S.support(X) + S.support(-X))
    assert np.allclose(delta_in(f).body.gauge(X), np.maximum(S.gauge(X), S.gauge(-X)))
    C = IndicatorFn(cube(3))
    assert np.allclose(delta_out(C).body.gauge(X), cube(3).gauge(X))


def test_projection_of_gaussian_is_its_marginal(gen):
    H = haar_subspace(3, 2, 4)
    B = H.basis
    g = functional_projection(GaussianFn(COV), H)
    Z = gen.standard_normal((20, 2))
    assert np.allclose(g.phi(Z), GaussianFn(B.T @ COV @ B).phi(Z), rtol=1e-8)


def test_restriction_of_gaussian_uses_restricted_precision(gen):
    H = haar_subspace(3, 2, 4)
    B = H.basis
    g = restrict(GaussianFn(COV), H)
    Z = gen.standard_normal((20, 2))
    prec = B.T @ np.linalg.inv(COV) @ B
    assert np.allclose(g.phi(Z), 0.5 * np.einsum("ij,jk,ik->i", Z, prec, Z))


def test_projection_commutes_with_delta_out_on_symmetric_input(gen):
    H = haar_subspace(3, 1, 2)
    f = LpExpFn(3, 1.5)
    Z = gen.standard_normal((10, 1))
    a = functional_projection(delta_out(f), H).phi(Z)
    b = functional_projection(f, H).phi(Z)
    assert np.allclose(a, b, rtol=1e-7, atol=1e-9)


def test_indicator_projection_and_restriction(gen):
    H = Subspace(np.eye(3)[:, :2])
    f = IndicatorFn(cube(3))
    Z = gen.standard_normal((20, 2))
    assert np.allclose(functional_projection(f, H).body.gauge(Z), np.abs(Z).max(axis=1), atol=1e-9)
    assert np.allclose(restrict(f, H).body.gauge(Z), np.abs(Z).max(axis=1))


def test_projection_dimension_check():
    with pytest.raises(FunctionError):
        functional_projection(GaussianFn(np.eye(2)), haar_subspace(3, 1, 0))


# --- function classes ------------------------------------------------------------------------


@given(st.integers(1, 4), st.integers(0, 2**32))
def test_shift_center_is_normalised_with_valid_tail(n, seed):
    g = np.random.default_rng(seed)
    f = ShiftCenterFn(LpExpFn(n, 2.5), g.uniform(-1, 1, n))
    assert f.phi(np.zeros(n)) == pytest.approx(0.0, abs=1e-14)
    X = g.standard_normal((200, n)) * 3
    assert np.all(f.phi(X) >= -1e-12)
    rho, beta = f.tail
    far = np.linalg.norm(X, axis=1) >= rho
    assert np.all(f.phi(X[far]) >= beta * np.linalg.norm(X[far], axis=1) - 1e-9)


@given(functions, st.integers(1, 4), st.integers(0, 2**32))
def test_tail_certificates_hold(kind, n, seed):
    f = _fn(kind, n)
    rho, beta = f.tail
    U = unit_rows(np.random.default_rng(seed), n, 50)
    for t in (rho, 2 * rho, 10 * rho):
        assert np.all(f.phi(t * U) >= beta * t - 1e-9)


def test_function_validation():
    with pytest.raises(FunctionError):
        GaussianFn([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(FunctionError):
        LpExpFn(2, 0.5)
    with pytest.raises(FunctionError):
        ShiftCenterFn(LpExpFn(2, 1.0), [0.1, 0.1])
    with pytest.raises(FunctionError):
        ShiftCenterFn(GaussianFn(np.eye(2)), [0.1])


# --- integrals ---------------------------------------------------------------------------------


def test_isotropic_gaussian_integral_is_exact():
    est = integral_on_subspace(GaussianFn(2.0 * np.eye(3)), budget=64, rng=0)
    assert est.value == pytest.approx((2 * math.pi) ** 1.5 * 2.0**1.5, rel=1e-8)


def test_anisotropic_gaussian_integral_within_three_sigma():
    est = integral_on_subspace(GaussianFn(COV), budget=4000, rng=RngStream(3))
    assert within_sigma(est, (2 * math.pi) ** 1.5 * math.sqrt(np.linalg.det(COV)), floor=1e-8)


def test_gaussian_section_integral():
    H = haar_subspace(3, 2, 6)
    B = H.basis
    prec = B.T @ np.linalg.inv(COV) @ B
    est = integral_on_subspace(GaussianFn(COV), H, budget=4000, rng=RngStream(1))
    assert within_sigma(est, 2 * math.pi / math.sqrt(np.linalg.det(prec)), floor=1e-8)


def test_lp_exp_integral_against_quadrature():
    # int_R exp(-|t|^a) dt = 2 Gamma(1 + 1/a), to the power n
    est = integral_on_subspace(LpExpFn(2, 1.5), budget=8000, rng=RngStream(2))
    assert within_sigma(est, (2 * math.gamma(1 + 1 / 1.5)) ** 2, floor=1e-8)


# --- one-dimensional lemma quantities ------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 5.0, 20.0])
def test_lemma_quantities_for_quadratic(p):
    M, t = lemma631_quantities(lambda s: s * s, p)
    tp = math.sqrt((p - 1) / 2)
    # a smooth maximum pins its location only to about sqrt(machine eps)
    assert t == pytest.approx(tp, rel=1e-6)
    assert M == pytest.approx(tp ** (p - 1) * math.exp(-tp * tp), rel=1e-12)


def test_lemma_quantities_against_scipy():
    g = lambda s: s + 0.3 * s**3  # noqa: E731
    M, t = lemma631_quantities(g, 3.0)
    res = optimize.minimize_scalar(lambda s: -(s**2) * math.exp(-g(s)), bounds=(1e-6, 10), method="bounded",
                                   options={"xatol": 1e-12})
    assert t == pytest.approx(res.x, rel=1e-6)
    assert M == pytest.approx(-res.fun, rel=1e-10)
    with pytest.raises(ValueError):
        lemma631_quantities(g, 1.0)


# --- JSON ---------------------------------------------------------------------------------------


def test_parse_functions(tmp_path):
    assert isinstance(parse_function({"type": "gaussian", "n": 3, "sigma": 2.0}), GaussianFn)
    assert parse_function({"type": "gaussian", "cov": [[1, 0], [0, 2]]}).dim == 2
    assert parse_function({"type": "lp_exp", "n": 2, "p": 1.5}).p == 1.5
    f = parse_function({"type": "shift_center", "shift": [0.1, 0.2], "inner": {"type": "lp_exp", "n": 2, "p": 3}})
    assert isinstance(f, ShiftCenterFn)
    g = parse_function({"type": "indicator", "body": {"type": "cube", "n": 2}})
    assert isinstance(g, IndicatorFn) and g.phi([2.0, 0.0]) == math.inf
    path = tmp_path / "f.json"
    path.write_text('{"type": "gaussian", "n": 2}')
    assert load_function(path).dim == 2
    assert load_function('{"type": "gaussian", "n": 2}').dim == 2


@pytest.mark.parametrize(
    "node, pointer",
    [
        ({}, "/"),
        ({"type": "gaussian"}, "/n"),
        ({"type": "gaussian", "cov": [[1, 2], [2, 1]]}, "/"),
        ({"type": "lp_exp", "n": "two"}, "/n"),
        ({"type": "indicator"}, "/"),
        ({"type": "indicator", "body": {"type": "ball"}}, "/body"),
        ({"type": "shift_center", "shift": [0.1]}, "/"),
        ({"type": "shift_center", "shift": [0.1], "inner": {"type": "lp_exp"}}, "/inner/n"),
        ({"type": "sawtooth"}, "/type"),
    ],
)
def test_parse_function_errors(node, pointer):
    with pytest.raises(BodySpecError) as info:
        parse_function(node)
    assert info.value.pointer == pointer


def test_indicator_integral_is_volume():
    est = integral_on_subspace(IndicatorFn(ball(3, 0.5)), budget=50, rng=0)
    assert est.value == pytest.approx(4 / 3 * math.pi / 8, rel=1e-12)
