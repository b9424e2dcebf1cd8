import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexreg.body import (
    Ellipsoid,
    ball,
    cross_polytope,
    cube,
    linear_image,
    polar,
    random_polytope,
    regular_simplex,
    section,
    translate,
)
from convexreg.body.ops import unit_simplex_volume
from convexreg.config import Config
from convexreg.measure import (
    Estimate,
    M_gauge,
    M_star,
    agrees,
    aleksandrov_Q,
    barycenter,
    central_binomial,
    covariance,
    holds_ge,
    holds_le,
    hit_and_run_sample,
    isotropic_normalize,
    paouris_pivovarov_Phi,
    phi_ball,
    polar_barycenter,
    santalo_point,
    volume,
    vrad,
    vrad_section_at,
)
from convexreg.numerics import RngStream, Subspace, haar_subspace, unit_ball_volume

from helpers import within_sigma


def _mean_abs_coordinate(n: int) -> float:
    # E|xi_1| for xi uniform on S^{n-1}
    return math.exp(math.lgamma(n / 2) - math.lgamma((n + 1) / 2)) / math.sqrt(math.pi)


# --- volumes --------------------------------------------------------------------


@pytest.mark.parametrize(
    "body, exact",
    [
        (cube(3), 8.0),
        (cube(4, 0.5), 1.0),
        (cross_polytope(3), 4.0 / 3.0),
        (regular_simplex(3), unit_simplex_volume(3)),
        (regular_simplex(5), unit_simplex_volume(5)),
        (Ellipsoid(np.diag([1.0, 2.0, 0.5, 3.0])), 3.0 * unit_ball_volume(4)),
    ],
)
def test_volume_within_three_sigma(body, exact):
    est = volume(body, 40_000, RngStream(11))
    assert est.stderr > 0 and est.n_samples == 40_000
    assert within_sigma(est, exact)
    assert est.rel_stderr() < 0.05


def test_ball_volume_and_vrad_are_exact():
    for n in (2, 5, 9):
        est = volume(ball(n, 2.0), 500, 0)
        assert est.value == pytest.approx(2.0**n * unit_ball_volume(n), rel=1e-13)
        assert est.stderr == pytest.approx(0.0, abs=1e-12 * est.value)
        assert vrad(ball(n, 2.0), 500, 0).value == pytest.approx(2.0, rel=1e-14)


def test_one_dimensional_volume_is_a_segment():
    H = Subspace(np.array([[1.0], [0.0], [0.0]]))
    S = section(translate(cube(3), [0.2, 0.0, 0.0]), H)
    est = volume(S)
    assert est.value == pytest.approx(2.0) and est.stderr == 0.0


def test_estimates_are_reproducible_by_seed():
    K = random_polytope(4, 10, 3)
    assert volume(K, 2000, RngStream(5)) == volume(K, 2000, RngStream(5))
    assert volume(K, 2000, RngStream(5)).value != volume(K, 2000, RngStream(6)).value
    assert volume(K, 2000, RngStream(5)).seed == 5


@given(st.integers(2, 5), st.floats(0.1, 10.0), st.integers(0, 2**32))
def test_volume_is_homogeneous_under_common_directions(n, lam, seed):
    K = random_polytope(n, 2 * n + 2, seed)
    a = volume(K, 500, RngStream(seed))
    b = volume(linear_image(K, lam * np.eye(n)), 500, RngStream(seed))
    assert b.value == pytest.approx(lam**n * a.value, rel=1e-9)
    assert b.stderr == pytest.approx(lam**n * a.stderr, rel=1e-9)


def test_volume_budget_must_allow_a_stderr():
    with pytest.raises(ValueError):
        volume(cube(3), 1)


# --- mean widths --------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 6])
def test_mean_width_of_cube_and_cross_polytope(n):
    exact = n * _mean_abs_coordinate(n)
    assert within_sigma(M_star(cube(n), 40_000, 1), exact)
    assert within_sigma(M_gauge(cross_polytope(n), 40_000, 1), exact)
    assert M_star(ball(n), 100, 1).value == pytest.approx(1.0)


@given(st.integers(2, 5), st.integers(0, 2**32))
def test_mean_norm_times_mean_width_at_least_one(n, seed):
    # Cauchy-Schwarz pointwise: p_K(xi) h_K(xi) >= <xi, xi> = 1, then Jensen on the product
    K = random_polytope(n, 3 * n, seed)
    m, ms = M_gauge(K, 2000, seed), M_star(K, 2000, seed)
    assert holds_ge(m * ms, 1.0)


def test_mean_width_duality_with_polar():
    K = random_polytope(3, 9, 2)
    # independent direction streams, so the two agree statistically
    assert agrees(M_star(K, 4000, 7), M_gauge(polar(K), 4000, 8))


# --- sections through offsets --------------------------------------------------------------


def test_section_at_origin_matches_central_section():
    K = random_polytope(4, 12, 8)
    H = haar_subspace(4, 2, 1)
    a = vrad_section_at(K, np.zeros(4), H, 3000, RngStream(2))
    b = vrad(section(K, H), 3000, RngStream(2))
    assert a.value == pytest.approx(b.value, rel=1e-7)


def test_offset_section_of_cube_is_a_square():
    H = Subspace(np.eye(3)[:, :2])
    est = vrad_section_at(cube(3), [0.0, 0.0, 0.7], H, 20_000, 4)
    assert within_sigma(est, math.sqrt(4 / math.pi))
    with pytest.raises(ValueError):
        vrad_section_at(cube(3), [0.0, 0.0, 1.0], H)


def test_offset_section_of_ball_is_smaller_ball():
    H = Subspace(np.eye(3)[:, :1])
    est = vrad_section_at(ball(3), [0.0, 0.6, 0.0], H)
    assert est.value == pytest.approx(0.8, rel=1e-7) and est.stderr == 0.0


# --- hit-and-run functionals ---------------------------------------------------------------


def test_hit_and_run_points_are_inside():
    K = regular_simplex(4)
    P = hit_and_run_sample(K, 2000, rng=3)
    assert P.shape == (2000, 4)
    assert np.all(K.gauge(P) <= 1 + 1e-9)


def test_barycenter_of_translated_simplex():
    z = np.array([0.1, -0.05, 0.08])
    est = barycenter(translate(regular_simplex(3), z), 20_000, RngStream(9))
    assert np.all(np.abs(est.value - z) <= 4 * est.stderr + 5e-3)


def test_cube_covariance_is_a_third_identity():
    est = covariance(cube(3), 20_000, RngStream(2))
    assert np.allclose(est.value, np.eye(3) / 3, atol=0.02)
    assert np.all(est.stderr > 0)


def test_polar_barycenter_of_symmetric_body_vanishes():
    est = polar_barycenter(cube(3), budget=20_000, rng=1)
    assert np.all(np.abs(est.value) <= 4 * est.stderr)


def test_santalo_point_of_symmetric_body_is_origin():
    res = santalo_point(cube(3), 20_000, 3)
    assert res.converged
    assert np.linalg.norm(res.point) < 0.02


def test_santalo_point_follows_translation():
    z = np.array([0.2, -0.1, 0.05])
    res = santalo_point(translate(cube(3), z), 20_000, 3)
    # same directions and a translated body: the fitted point moves with it
    ref = santalo_point(cube(3), 20_000, 3)
    assert res.converged
    assert np.allclose(res.point, ref.point + z, atol=1e-5)


def test_isotropic_normalisation_of_cube():
    body, rep = isotropic_normalize(cube(3), 20_000, RngStream(4))
    assert rep.converged
    assert abs(rep.volume.value - 1) < 0.05
    # the cube of volume one has L = 1/sqrt(12)
    assert rep.L_K.value == pytest.approx(1 / math.sqrt(12), rel=0.05)
    assert rep.covariance_residual < 0.15 and rep.barycenter_residual < 0.15
    X = np.random.default_rng(0).standard_normal((5, 3))
    assert np.allclose(body.gauge(X), cube(3).gauge(np.linalg.solve(rep.transform, X.T).T + rep.shift), rtol=1e-9)


def test_isotropic_normalisation_recentres_simplex():
    _, rep = isotropic_normalize(translate(regular_simplex(3), [0.1, 0.1, 0.0]), 20_000, RngStream(4))
    assert rep.converged
    assert np.allclose(rep.shift, [0.1, 0.1, 0.0], atol=0.03)


# --- Grassmannian averages ------------------------------------------------------------------


def test_first_quermass_mean_equals_mean_width():
    # Q_1 averages half the width of random 1-projections, i.e. M*
    n = 3
    est = aleksandrov_Q(cube(n), 1, n_subspaces=400, budget=10, rng=RngStream(5))
    assert within_sigma(est, n * _mean_abs_coordinate(n), k=4.0)


def test_quermass_mean_of_ball_is_one():
    est = aleksandrov_Q(ball(4), 2, n_subspaces=8, budget=200, rng=0)
    assert est.value == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n, k", [(3, 1), (4, 2), (6, 5)])
def test_phi_of_ball_matches_closed_form(n, k):
    est = paouris_pivovarov_Phi(ball(n), k, n_subspaces=4, budget=100, rng=0).estimate
    assert est.value == pytest.approx(phi_ball(n, k), rel=1e-12)


def test_phi_ball_closed_form_values():
    assert phi_ball(3, 1) == pytest.approx(2.0 * (4 * math.pi / 3) ** (-1 / 3))
    assert phi_ball(2, 1) == pytest.approx(2.0 / math.sqrt(math.pi))
    for n in range(2, 8):
        for k in range(1, n):
            assert central_binomial(n, k) == pytest.approx(math.comb(n, k), rel=1e-12)


def test_grassmann_functionals_reject_asymmetric_bodies():
    with pytest.raises(ValueError):
        aleksandrov_Q(regular_simplex(3), 1)
    with pytest.raises(ValueError):
        paouris_pivovarov_Phi(regular_simplex(3), 1)
    with pytest.raises(ValueError):
        aleksandrov_Q(cube(3), 3)


# --- comparison rule and arithmetic ------------------------------------------------------------


def test_comparison_rule_sigma_and_relative_slack():
    assert holds_le(Estimate(1.0, 0.1, 100), 0.8)  # 0.2 excess inside 3 sigma
    assert not holds_le(Estimate(1.5, 0.1, 100), 0.8)
    assert holds_le(1.0005, 1.0)  # exact values: relative epsilon only
    assert not holds_le(1.002, 1.0)
    assert holds_ge(Estimate(0.9, 0.05, 10), Estimate(1.0, 0.0, 0))
    assert agrees(Estimate(1.0, 0.01, 10), Estimate(1.02, 0.01, 10))
    assert not agrees(Estimate(1.0, 0.001, 10), 1.1)


def test_comparison_rule_tracks_config():
    tight = Config(sigma_slack=0.0, rel_eps=0.0)
    assert not holds_le(Estimate(1.0001, 1.0, 10), 1.0, tight)
    assert holds_le(1.0, 1.0, tight)


def test_estimate_error_propagation():
    a, b = Estimate(2.0, 0.2, 10), Estimate(4.0, 0.4, 20)
    assert a.scale(-3).value == -6.0 and a.scale(-3).stderr == pytest.approx(0.6)
    p = a.power(0.5)
    assert p.value == pytest.approx(math.sqrt(2)) and p.stderr == pytest.approx(0.5 * math.sqrt(2) * 0.1)
    m = a * b
    assert m.value == 8.0 and m.stderr == pytest.approx(8.0 * math.sqrt(2) * 0.1)
    q = a / b
    assert q.value == 0.5 and q.stderr == pytest.approx(0.5 * math.sqrt(2) * 0.1)
    assert (a * 3.0).value == 6.0 and (a * 3.0).stderr == pytest.approx(0.6)
    assert float(Estimate.exact(1.5)) == 1.5 and Estimate.exact(1.5).stderr == 0.0
