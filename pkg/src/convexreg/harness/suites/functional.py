"""Functional suite: Ball's bodies, the Delta operators and integral ratios."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import special

from ...body import outer_reg
from ...config import KAPPA_BALL_BODY, SANDWICH_CONSTANT
from ...functional import (
    GaussianFn,
    IndicatorFn,
    ball_body_out_hull,
    ball_body_radial_batch,
    ball_body_radial_membership,
    delta_in,
    delta_out,
    delta_zero,
    functional_projection,
    integral_on_subspace,
    lemma631_quantities,
    level_body_radial,
)
from ...numerics import haar_subspace, quad_1d, sphere_directions
from .common import Context, log_factor

G_FAMILY = {
    "t": lambda t: t,
    "t^2": lambda t: t * t,
    "t+t^3": lambda t: t + t**3,
}


def suite_functional(ctx: Context) -> None:
    if ctx.task.item is None:
        _lemma631_rows(ctx)
        return
    item = ctx.task.item
    try:
        f = item.build()
    except Exception as exc:  # noqa: BLE001
        ctx.fail("build", exc)
        return
    n, B = ctx.n, ctx.budgets
    ps = list(ctx.exp.p_values)
    U = sphere_directions(n, B.fn_points, ctx.stream("U"))
    indicator = isinstance(f, IndicatorFn)

    if not ctx.calibrating:
        if indicator:
            _indicator_rows(ctx, f, ps, U)
        else:
            _pointwise_rows(ctx, f)
            _lemma632_rows(ctx, f, [p for p in ps if p >= 2], U)
        if isinstance(f, GaussianFn):
            _gaussian_rows(ctx, f, ps, U)
        _inclusion_rows(ctx, f, ps, U)

    _lemma633_rows(ctx, f, [p for p in ps if 2 <= p <= n + 1], U)
    _integral_rows(ctx, f, roysdon=indicator or isinstance(f, GaussianFn))


# ---------------------------------------------------------------------------
# one-dimensional lemma


def _lemma631_rows(ctx: Context) -> None:
    for (name, g), p in itertools.product(G_FAMILY.items(), ctx.exp.p_values):
        label = f"g={name},p={p:g}"

        def quantities(p=p, g=g):
            return ctx.memo(("631", name, p), lambda: lemma631_quantities(g, p))

        def integral(p=p, g=g):
            return ctx.memo(("631-int", name, p),
                            lambda: quad_1d(lambda t: t ** (p - 1) * math.exp(-g(t)), 0.0, math.inf))

        def lower(r, p=p, q=quantities, i=integral):
            M, t = q()
            return i(), M * t / p

        def upper(r, p=p, q=quantities, i=integral):
            M, t = q()
            return i(), SANDWICH_CONSTANT * M * t / math.sqrt(p - 1)

        ctx.emit("lemma631-lower", 0, label, lower, "ge")
        ctx.emit("lemma631-upper", 0, label, upper, "le")
        ctx.emit("lemma631-bracket-low", 0, label, lambda r, p=p, g=g, q=quantities: (g(q()[1]), p - 1), "le")
        ctx.emit("lemma631-bracket-high", 0, label, lambda r, p=p, g=g, q=quantities: (g(2 * q()[1]), p - 1), "ge")


# ---------------------------------------------------------------------------
# exact and pointwise identities


def _indicator_rows(ctx, f: IndicatorFn, ps, U):
    for p in ps:
        def compute(r, p=p):
            a = np.array([ball_body_radial_membership(f, p, u, ctx.config) for u in U])
            b = f.body.radial(U)
            return float(np.max(np.abs(a - b) / b)), 0.0

        ctx.emit("kp-indicator", 0, f"{ctx.task.item_id},p={p:g}", compute, "exact", tol=1e-8)


def _sample_points(ctx, f, count):
    g = ctx.stream("points").generator()
    X = g.standard_normal((count, f.dim))
    X /= np.linalg.norm(X, axis=1)[:, None]
    return X * g.uniform(0.0, 2.0 * f.tail[0], size=(count, 1))


def _pointwise_rows(ctx, f):
    body = ctx.task.item_id
    X = _sample_points(ctx, f, ctx.budgets.fn_points)
    dout = ctx.memo("delta_out", lambda: delta_out(f))
    din = delta_in(f)
    phi_out = lambda: ctx.memo("phi_out", lambda: dout.phi(X))  # noqa: E731

    ctx.emit("delta-out-at-zero", 0, body, lambda r: (math.exp(-dout.phi(np.zeros(f.dim))), 1.0), "exact", tol=1e-12)
    ctx.emit("delta-in-le-f", 0, body, lambda r: (float(np.max(np.exp(f.phi(X) - din.phi(X)))), 1.0), "le")
    ctx.emit("delta-in-le-delta-out", 0, body,
             lambda r: (float(np.max(np.exp(phi_out() - din.phi(X)))), 1.0), "le")


def _gaussian_rows(ctx, f: GaussianFn, ps, U):
    body = ctx.task.item_id
    q = np.einsum("ij,jk,ik->i", U, f.prec, U)
    X = _sample_points(ctx, f, ctx.budgets.fn_points)
    dout = ctx.memo("delta_out", lambda: delta_out(f))
    phi_out = lambda: ctx.memo("phi_out", lambda: dout.phi(X))  # noqa: E731
    ctx.emit("delta-out-fixed-point", 0, body,
             lambda r: (float(np.max(np.abs(np.exp(-phi_out()) - np.exp(-f.phi(X))))), 0.0), "exact", tol=1e-8)
    for p in ps:
        if p > 1:
            def level(r, p=p):
                got = np.array([level_body_radial(f, p, u) for u in U])
                want = np.sqrt(2 * (p - 1) / q)
                return float(np.max(np.abs(got - want) / want)), 0.0

            ctx.emit("level-radial-gaussian", 0, f"{body},p={p:g}", level, "exact", tol=1e-9)

        def ball(r, p=p):
            got = ball_body_radial_batch(f, p, U, ctx.config)
            c = math.exp((math.log(p) + special.gammaln(p / 2) + (p / 2 - 1) * math.log(2)) / p)
            want = c / np.sqrt(q)
            return float(np.max(np.abs(got - want) / want)), 0.0

        ctx.emit("kp-radial-gaussian", 0, f"{body},p={p:g}", ball, "exact", tol=1e-6)

    for k in ctx.exp.k_values(f.dim):
        def identity(r, k=k):
            H = haar_subspace(f.dim, k, r.child("H"))
            M = H.basis.T @ f.prec @ H.basis
            exact = (2 * math.pi) ** (k / 2) / math.sqrt(np.linalg.det(M))
            return integral_on_subspace(f, H, ctx.budgets.fn_directions, r.child("int"), ctx.config), exact

        ctx.emit("section-identity-gaussian", k, body, identity, "agree")


def _inclusion_rows(ctx, f, ps, U):
    """Gamma(p+1)^{1/p} / Gamma(q+1)^{1/q} K_q(f) in K_p(f) in K_q(f) for p < q."""
    body = ctx.task.item_id
    rho = {p: (lambda p=p: ctx.memo(("rho", p), lambda: ball_body_radial_batch(f, p, U, ctx.config))) for p in ps}
    for p, q in itertools.combinations(sorted(ps), 2):
        c = math.exp(special.gammaln(p + 1) / p - special.gammaln(q + 1) / q)
        label = f"{body},p={p:g},q={q:g}"
        ctx.emit("inclusions-kp-lower", 0, label,
                 lambda r, p=p, q=q, c=c: (float(np.min(rho[p]() / (c * rho[q]()))), 1.0), "ge")
        ctx.emit("inclusions-kp-upper", 0, label,
                 lambda r, p=p, q=q: (float(np.max(rho[p]() / rho[q]())), 1.0), "le")


def _lemma632_rows(ctx, f, ps, U):
    """Along each ray g(t) = phi(t xi): t_p <= rho_{R_p} <= 2 t_p and
    t_p / e <= rho_{K_p} <= kappa t_p."""
    body = ctx.task.item_id
    for p in ps:
        def ratios(p=p):
            def build():
                tp = np.array([lemma631_quantities(lambda t, u=u: float(f.phi(t * u)), p)[1] for u in U])
                level = np.array([level_body_radial(f, p, u) for u in U])
                ball = ball_body_radial_batch(f, p, U, ctx.config)
                return level / tp, ball / tp

            return ctx.memo(("632", p), build)

        label = f"{body},p={p:g}"
        ctx.emit("lemma632-level-lower", 0, label, lambda r, q=ratios: (float(np.min(q()[0])), 1.0), "ge")
        ctx.emit("lemma632-level-upper", 0, label, lambda r, q=ratios: (float(np.max(q()[0])), 2.0), "le")
        ctx.emit("lemma632-ball-lower", 0, label, lambda r, q=ratios: (float(np.min(q()[1])), math.exp(-1.0)), "ge")
        ctx.emit("lemma632-ball-upper", 0, label, lambda r, q=ratios: (float(np.max(q()[1])), KAPPA_BALL_BODY), "le")


def _lemma633_rows(ctx, f, ps, U):
    """Directional ratios K_p(Delta_out f) : K_p(f)_out and K_p(Delta_in f) : K_p(f)_in.

    The in-side is exact: rho_{K_in} = min(rho(xi), rho(-xi)).  The
    out-side needs K_p(f)_out = conv(K_p(f), -K_p(f)); indicators use the
    exact body, other functions an inner hull of boundary points, which
    is only built for n <= 3.
    """
    body = ctx.task.item_id
    n = f.dim
    indicator = isinstance(f, IndicatorFn)
    for p in ps:
        label = f"{body},p={p:g}"

        def in_ratio(p=p):
            def build():
                a = ball_body_radial_batch(delta_in(f), p, U, ctx.config)
                b = np.minimum(ball_body_radial_batch(f, p, U, ctx.config), ball_body_radial_batch(f, p, -U, ctx.config))
                return a / b

            return ctx.memo(("633-in", p), build)

        ctx.emit("lemma633-in-upper", 0, label, lambda r, q=in_ratio: (float(np.max(q())), 1.0), "cal-le")
        ctx.emit("lemma633-in-lower", 0, label, lambda r, q=in_ratio: (float(np.min(q())), 1.0), "cal-ge")
        if not indicator and n > 3:
            continue

        def out_ratio(p=p):
            def build():
                a = ball_body_radial_batch(ctx.memo("delta_out", lambda: delta_out(f)), p, U, ctx.config)
                if indicator:
                    hull = outer_reg(f.body)
                else:
                    hull = ball_body_out_hull(f, p, rng=ctx.stream("hull", p), config=ctx.config)
                return a / hull.radial(U)

            return ctx.memo(("633-out", p), build)

        ctx.emit("lemma633-out-upper", 0, label, lambda r, q=out_ratio: (float(np.max(q())), 1.0), "cal-le")
        ctx.emit("lemma633-out-lower", 0, label, lambda r, q=out_ratio: (float(np.min(q())), 1.0), "cal-ge")


# ---------------------------------------------------------------------------
# integrals over subspaces


def _integral_rows(ctx, f, roysdon: bool):
    body = ctx.task.item_id
    n, B, cfg = f.dim, ctx.budgets, ctx.config
    dout = ctx.memo("delta_out", lambda: delta_out(f))
    din = delta_in(f)
    d0 = ctx.memo("delta_zero", lambda: delta_zero(f))

    for k in ctx.exp.k_values(n):
        scale = (n / k) ** 2 * log_factor(n, 3)
        for j in range(B.subspaces):
            H = haar_subspace(n, k, ctx.stream("H", k, j))

            def on_H(name, g, k=k, j=j, H=H):
                def build():
                    est = integral_on_subspace(g, H, B.fn_directions, ctx.stream("int", name, k, j), cfg)
                    return est.power(1.0 / k)

                return ctx.memo(("int", name, k, j), build)

            def projected(name, g, k=k, j=j, H=H):
                def build():
                    est = integral_on_subspace(functional_projection(g, H), None, B.fn_directions,
                                               ctx.stream("proj", name, k, j), cfg)
                    return est.power(1.0 / k)

                return ctx.memo(("proj", name, k, j), build)

            labels = (j,)
            ctx.emit("thm-sections-functional", k, body,
                     lambda r, o=on_H: (o("out", dout), o("in", din)), "cal-le", scale=scale, labels=labels)
            ctx.emit("thm-projections-functional", k, body,
                     lambda r, pr=projected: (pr("out", dout), pr("in", din)), "cal-le", scale=scale, labels=labels)
            ctx.emit("sections-functional-lower", k, body,
                     lambda r, o=on_H: (o("out", dout), o("f", f)), "cal-ge", labels=labels)
            if roysdon:
                ctx.emit("roysdon-lower", k, body,
                         lambda r, o=on_H: (o("zero", d0), o("f", f)), "cal-ge", labels=labels)
