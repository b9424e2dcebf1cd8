"""Oracle identities and classical volume inequalities."""

from __future__ import annotations

import math

import numpy as np

from ...body import inner_reg, minkowski_diff_body, outer_reg, polar, project, section
from ...body import lift as lifts
from ...body.ops import LiftBody
from ...measure import M_gauge, M_star, volume, vrad, vrad_section_at
from ...numerics import haar_subspace, sphere_directions, unit_ball_volume
from .common import Context, body_label, is_simplex, normalized, section_interior_points

# ---------------------------------------------------------------------------
# pointwise identities


def _max_rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def _identity(ctx: Context, iid: str, body: str, fn_a, fn_b, tol: float, k: int = 0):
    """Largest relative gap between two oracles on random unit vectors (of H when k > 0)."""
    dim = k if k else ctx.n

    def compute(rng):
        X = sphere_directions(dim, ctx.budgets.points, rng)
        return _max_rel_err(fn_a(X), fn_b(X)), 0.0

    ctx.emit(iid, k, body, compute, "exact", tol=tol)


def suite_duality(ctx: Context) -> None:
    """(K_out)° = (K°)_in and (K_in)° = (K°)_out, each through gauges and supports."""
    try:
        K = ctx.task.item.build()
    except Exception as exc:  # noqa: BLE001
        ctx.fail("build", exc)
        return
    tol = ctx.config.oracle_rel_tol
    body = ctx.task.item_id
    Kpol = polar(K)
    out_pol = polar(outer_reg(K))
    pol_in = inner_reg(Kpol)
    in_pol = polar(inner_reg(K))
    pol_out = outer_reg(Kpol)
    _identity(ctx, "duality-out:gauge", body, out_pol.gauge, pol_in.gauge, tol)
    _identity(ctx, "duality-out:support", body, out_pol.support, pol_in.support, tol)
    _identity(ctx, "duality-in:gauge", body, in_pol.gauge, pol_out.gauge, tol)
    _identity(ctx, "duality-in:support", body, in_pol.support, pol_out.support, tol)


def suite_bipolar(ctx: Context) -> None:
    """(K°)° = K through a twice-dualised lift, and p_{P_H K} = h_{K° n H}."""
    try:
        K = ctx.task.item.build()
    except Exception as exc:  # noqa: BLE001
        ctx.fail("build", exc)
        return
    tol = ctx.config.oracle_rel_tol
    body = ctx.task.item_id
    n = ctx.n
    L = K.lift()
    if L is not None:
        KK = lambda: ctx.memo(  # noqa: E731
            "bipolar-lift", lambda: LiftBody(lifts.polar(lifts.polar(L)), tag="bipolar", r_out=K.r_out)
        )
        _identity(ctx, "bipolar:support", body, lambda X: KK().support(X), K.support, tol)
        _identity(ctx, "bipolar:gauge", body, lambda X: KK().gauge(X), K.gauge, tol)
    else:
        KK = polar(polar(K))
        _identity(ctx, "bipolar:support", body, KK.support, K.support, tol)
        _identity(ctx, "bipolar:gauge", body, KK.gauge, K.gauge, tol)
    Kpol = polar(K)
    for k in ctx.exp.k_values(n):
        H = haar_subspace(n, k, ctx.stream("H", k))
        P, S = project(K, H), section(Kpol, H)
        _identity(ctx, "projection-polar", body, P.gauge, S.support, tol, k=k)


# ---------------------------------------------------------------------------
# classics


def _simplex_volume(V: np.ndarray) -> float:
    n = V.shape[1]
    return abs(np.linalg.det(V[1:] - V[0])) / math.factorial(n)


def suite_classics(ctx: Context) -> None:
    item = ctx.task.item
    try:
        K0 = item.build()
    except Exception as exc:  # noqa: BLE001
        ctx.fail("build", exc)
        return
    n, B, cfg = ctx.n, ctx.budgets, ctx.config
    mode = "sym" if K0.symmetric else "bar"
    label = body_label(item.id, mode)

    def K():
        return normalized(ctx, K0, "bar")

    def est(key, fn):
        """Memoised Monte Carlo quantity with its own stream."""
        return ctx.memo(key, lambda: fn(ctx.stream(*map(str, key))))

    d = B.directions
    vol_K = lambda: est(("vol", "K"), lambda r: volume(K(), d, r, cfg))  # noqa: E731
    M_K = lambda: est(("M", "K"), lambda r: M_gauge(K(), d, r, cfg))  # noqa: E731
    Ms_K = lambda: est(("M*", "K"), lambda r: M_star(K(), d, r, cfg))  # noqa: E731
    Kout = lambda: ctx.memo("Kout", lambda: outer_reg(K()))  # noqa: E731
    Kin = lambda: ctx.memo("Kin", lambda: inner_reg(K()))  # noqa: E731

    if not ctx.calibrating:
        ctx.emit("mm-star", 0, label, lambda r: (M_K() * Ms_K(), 1.0), "ge")
        ctx.emit("mstar-out", 0, label, lambda r: (M_star(Kout(), d, r, cfg), Ms_K().scale(2.0)), "le")
        ctx.emit("m-in", 0, label, lambda r: (M_gauge(Kin(), d, r, cfg), M_K().scale(2.0)), "le")
        ctx.emit("monotone-m-out", 0, label, lambda r: (M_gauge(Kout(), d, r, cfg), M_K()), "le")
        ctx.emit("monotone-mstar-in", 0, label, lambda r: (M_star(Kin(), d, r, cfg), Ms_K()), "le")

        vol_out = lambda: est(("vol", "Kout"), lambda r: volume(Kout(), d, r, cfg))  # noqa: E731
        vol_in = lambda: est(("vol", "Kin"), lambda r: volume(Kin(), d, r, cfg))  # noqa: E731
        ctx.emit("milman-pajor-in", 0, label, lambda r: (vol_in(), vol_K().scale(2.0**-n)), "ge")
        ctx.emit("milman-pajor-out", 0, label, lambda r: (vol_out(), vol_K().scale(2.0**n)), "le")

        if n <= B.rs_max_dim:
            diff = lambda: ctx.memo("diff", lambda: minkowski_diff_body(K()))  # noqa: E731
            rs_ratio = lambda: est(("rs",), lambda r: volume(diff(), d, r, cfg) / vol_K())  # noqa: E731
            ctx.emit("rogers-shephard-lower", 0, label, lambda r: (rs_ratio(), 2.0**n), "ge")
            ctx.emit("rogers-shephard-upper", 0, label, lambda r: (rs_ratio(), math.comb(2 * n, n)), "le")

        for k in ctx.exp.k_values(n):
            _section_projection_rows(ctx, K, vol_K, label, k)

        _santalo_rows(ctx, K0, item.id)
        _symmetric_product_rows(ctx, K0 if K0.symmetric else Kout, label if K0.symmetric else f"{label}/out")
        _oracle_rows(ctx, K0)

    for k in ctx.exp.k_values(n):
        if n <= B.fradelizi_max_dim:
            _fradelizi_rows(ctx, K, label, k)
        _rudelson_rows(ctx, K, label, k)


def _section_projection_rows(ctx, K, vol_K, label, k):
    n, d, cfg = ctx.n, ctx.budgets.directions, ctx.config

    def build():
        H = haar_subspace(n, k, ctx.stream("H-sp", k))
        pv = volume(project(K(), H), d, ctx.stream("vol-P", k), cfg)
        sv = volume(section(K(), H.complement()), d, ctx.stream("vol-S", k), cfg)
        return pv * sv

    product = lambda: ctx.memo(("sp-product", k), build)  # noqa: E731
    ctx.emit("spingarn-lower", k, label, lambda r: (product(), vol_K()), "ge")
    ctx.emit("rs-section-upper", k, label, lambda r: (product(), vol_K().scale(math.comb(n, k))), "le")


def _santalo_rows(ctx, K0, item_id):
    n, d, cfg = ctx.n, ctx.budgets.directions, ctx.config
    mode = "sym" if K0.symmetric else "santalo"
    label = body_label(item_id, mode)
    w2 = unit_ball_volume(n) ** 2

    def product():
        def build():
            L = normalized(ctx, K0, mode) if mode != "sym" else K0
            v = volume(L, d, ctx.stream("vol", mode), cfg)
            vp = volume(polar(L), d, ctx.stream("vol-polar", mode), cfg)
            return (v * vp).scale(1.0 / w2)

        return ctx.memo(("santalo-product", mode), build)

    ctx.emit("blaschke-santalo", 0, label, lambda r: (product(), 1.0), "le")
    ctx.emit("bourgain-milman", 0, label, lambda r: (product(), 0.2**n), "ge")


def _symmetric_product_rows(ctx, C, label):
    n, d, cfg = ctx.n, ctx.budgets.directions, ctx.config
    get = C if callable(C) else (lambda: C)
    for k in ctx.exp.k_values(n):
        def compute(r, k=k):
            L = get()
            H = haar_subspace(n, k, r.child("H"))
            a = vrad(project(L, H), d, r.child("P"), cfg)
            b = vrad(section(polar(L), H), d, r.child("S"), cfg)
            return a * b, 1.0

        ctx.emit("symmetric-section-product", k, label, compute, "le")


def _oracle_rows(ctx, K0):
    item = ctx.task.item
    n, cfg, big = ctx.n, ctx.config, ctx.budgets.oracle_directions
    if item.spec.get("type") == "ball":
        radius = float(item.spec.get("radius", 1.0))
        ctx.emit("vrad-ball", 0, item.id, lambda r: (vrad(K0, ctx.budgets.directions, r, cfg), radius),
                 "exact", tol=1e-12)
    if n == 2 and is_simplex(K0):
        def triangle(r):
            exact = _simplex_volume(K0.vertices)
            return volume(minkowski_diff_body(K0), big, r, cfg).scale(1.0 / exact), 6.0

        ctx.emit("triangle-difference", 0, item.id, triangle, "agree")
    if item.spec.get("type") == "cube" and 2 <= n <= 4:
        def cube(r):
            v = volume(K0, big, r.child("Q"), cfg)
            vp = volume(polar(K0), big, r.child("Qpolar"), cfg)
            w2 = unit_ball_volume(n) ** 2
            return (v * vp).scale(1.0 / w2), 4.0**n / math.factorial(n) / w2

        ctx.emit("cube-santalo", 0, item.id, cube, "agree")


def _fradelizi_rows(ctx, K, label, k):
    """max_x vrad(K n (x + H)) <= (n+1)/(k+1) vrad(K n H) for bar(K) = 0.

    The maximum over x runs over H-perp: a centred grid of 5^m offsets
    (m = min(n-k, 3) leading directions of H-perp) spaced by R/4, where R
    is K's certified outer radius, then 20 pattern-search steps over all
    of H-perp.  Search evaluations share one direction set; the winner is
    re-estimated on fresh directions.
    """
    n, cfg = ctx.n, ctx.config
    search_budget = min(ctx.budgets.points, ctx.budgets.directions)

    def compute(r):
        L = K()
        H = haar_subspace(n, k, r.child("H"))
        C = H.complement().basis
        m = min(n - k, 3)
        R = L.r_out
        ticks = np.array([-1.0, -0.5, 0.0, 0.5, 1.0]) * R / 2
        grid = np.stack(np.meshgrid(*([ticks] * m), indexing="ij"), axis=-1).reshape(-1, m)
        coords = np.hstack([grid, np.zeros((len(grid), C.shape[1] - m))])
        common = r.child("search")

        def values(Y):
            X = Y @ C.T
            P, g = section_interior_points(L, X, H.basis, cfg)
            out = np.zeros(len(Y))
            for i in np.flatnonzero(g < 1.0 - 1e-9):
                out[i] = vrad_section_at(L, P[i], H, search_budget, common, cfg).value
            return out, P

        vals, P = values(coords)
        best = int(np.argmax(vals))
        y, v, p = coords[best], vals[best], P[best]
        step = R / 4
        E = np.vstack([np.eye(C.shape[1]), -np.eye(C.shape[1])])
        for _ in range(20):
            cand = y + step * E
            cv, cp = values(cand)
            j = int(np.argmax(cv))
            if cv[j] > v:
                y, v, p = cand[j], cv[j], cp[j]
            else:
                step /= 2
        top = vrad_section_at(L, p, H, ctx.budgets.directions, r.child("final"), cfg)
        centre = vrad_section_at(L, np.zeros(n), H, ctx.budgets.directions, r.child("centre"), cfg)
        return top, centre.scale((n + 1) / (k + 1))

    ctx.emit("fradelizi", k, label, compute, "le")


def _rudelson_rows(ctx, K, label, k):
    n, d, cfg = ctx.n, ctx.budgets.directions, ctx.config

    def compute(r):
        L = K()
        H = haar_subspace(n, k, r.child("H"))
        a = vrad(section(minkowski_diff_body(L), H), d, r.child("diff"), cfg)
        b = vrad(section(L, H), d, r.child("sec"), cfg)
        return a, b

    ctx.emit("rudelson-fradelizi", k, label, compute, "cal-le", scale=(n / k) ** 2)
