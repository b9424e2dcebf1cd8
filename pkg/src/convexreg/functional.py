"""Geometric log-concave functions and Ball's bodies.

A function is ``f = exp(-phi)`` with ``phi`` convex, ``phi(0) = 0`` and
``phi >= 0``.  ``phi`` is evaluated on ``(N, n)`` arrays.  Every function
carries a tail certificate ``(rho_tail, beta)``: ``phi(x) >= beta |x|``
whenever ``|x| >= rho_tail``.

Operators that are defined by an infimum (Delta_out, Delta_0, functional
projections) become :class:`MinFn` instances: ``phi(x) = min_w psi(x, w)``
with ``psi`` jointly convex, so nesting them merges the inner variables
instead of nesting minimisations.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy import special

from .body import ConvexBody, HullPolytope, RadialBody, inner_reg, minkowski_diff_body, project, probe_inradius
from .body.core import LinearImageBody
from .body.io import BodySpecError, parse_body
from .config import DEFAULT, KAPPA_BALL_BODY, Config
from .measure import Estimate, _seed
from .numerics import (
    NumericsError,
    QuadratureError,
    Subspace,
    as_stream,
    convex_descent,
    golden_line_search,
    panel_nodes,
    quad_1d,
    root_find_increasing,
    sphere_directions,
    unit_ball_volume,
)


class FunctionError(ValueError):
    pass


def _rows(X, d):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got {X.shape[1]}")
    return X, single


class LogConcaveFn:
    dim: int
    tail: tuple[float, float]
    symmetric: bool = False
    centered: bool = False
    tag: str = "fn"

    def phi(self, X):
        X, single = _rows(X, self.dim)
        out = self._phi(X)
        return float(out[0]) if single else out

    def __call__(self, X):
        return np.exp(-self.phi(X))

    def _phi(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.tag} dim={self.dim}>"


class GaussianFn(LogConcaveFn):
    """exp(-x^T cov^{-1} x / 2)."""

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
            raise FunctionError("covariance must be a symmetric matrix")
        w = np.linalg.eigvalsh(cov)
        if w.min() <= 0:
            raise FunctionError("covariance must be positive definite")
        self.cov = cov
        self.prec = np.linalg.inv(cov)
        self.dim = cov.shape[0]
        # |x|^2 / (2 lmax) >= |x| / (2 lmax) for |x| >= 1
        self.tail = (1.0, 1.0 / (2 * w.max()))
        self.symmetric = self.centered = True
        self.tag = "gaussian"

    def _phi(self, X):
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.prec, X)

    def grad(self, x):
        return self.prec @ x


class LpExpFn(LogConcaveFn):
    """exp(-||x||_p^p)."""

    def __init__(self, n: int, p: float):
        if p < 1:
            raise FunctionError("p must be >= 1")
        self.dim, self.p = n, float(p)
        c = n ** min(0.0, 1.0 / p - 0.5)  # ||x||_p >= c |x|
        self.tail = (1.0 / c, c)
        self.symmetric = self.centered = True
        self.tag = f"lp_exp({p:g})"

    def _phi(self, X):
        return np.sum(np.abs(X) ** self.p, axis=1)

    def grad(self, x):
        return self.p * np.abs(x) ** (self.p - 1) * np.sign(x)


class ShiftCenterFn(LogConcaveFn):
    """The inner function re-expanded around the point ``shift``:

        phi(x) = phi_in(x + s) - phi_in(s) - <grad phi_in(s), x>.

    The maximum stays at 0 while the shape around it is the (generally
    asymmetric) neighbourhood of s.  Needs a strictly convex, smooth inner.
    """

    def __init__(self, inner: LogConcaveFn, shift):
        if not hasattr(inner, "grad"):
            raise FunctionError("shift_center needs a differentiable inner function")
        if isinstance(inner, LpExpFn) and inner.p <= 1:
            raise FunctionError("shift_center needs a strictly convex inner function")
        s = np.asarray(shift, dtype=float).ravel()
        if s.size != inner.dim:
            raise FunctionError("shift has wrong dimension")
        self.inner, self.s = inner, s
        self.dim = inner.dim
        self._phi_s = float(inner.phi(s))
        self._g = inner.grad(s)
        self.symmetric = not np.any(s)
        self.centered = False
        self.tag = f"shift_center({inner.tag})"
        self.tail = self._certify_tail()

    def _phi(self, X):
        return self.inner._phi(X + self.s) - self._phi_s - X @ self._g

    def grad(self, x):
        return self.inner.grad(x + self.s) - self._g

    def _certify_tail(self):
        # phi(t u)/t is non-decreasing in t, so the minimum of phi over a
        # sphere of radius R bounds the slope beyond R on every ray
        U = sphere_directions(self.dim, 4000, 12345)
        R = 1.0
        for _ in range(60):
            m = float(self._phi(R * U).min())
            if m >= 1.0:
                return (R, 0.5 * m / R)
            R *= 2
        raise FunctionError("could not certify a tail bound")


class IndicatorFn(LogConcaveFn):
    """1_K for a convex body K; operators short-circuit to body constructions."""

    def __init__(self, body: ConvexBody, tag: str | None = None):
        self.body = body
        self.dim = body.dim
        self.tail = (body.r_out * (1 + 1e-9), 1.0)
        self.symmetric = body.symmetric
        self.centered = body.symmetric
        self.tag = tag or f"indicator({body.tag})"

    def _phi(self, X):
        return np.where(self.body.gauge(X) <= 1.0, 0.0, np.inf)


class MaxSymFn(LogConcaveFn):
    """Delta_in f = min(f(x), f(-x)), i.e. phi = max(phi(x), phi(-x))."""

    def __init__(self, f: LogConcaveFn):
        self.f = f
        self.dim = f.dim
        self.tail = f.tail
        self.symmetric = True
        self.centered = True
        self.tag = f"delta_in({f.tag})"

    def _phi(self, X):
        return np.maximum(self.f._phi(X), self.f._phi(-X))


class MinFn(LogConcaveFn):
    """phi(x) = min_w psi(x, w) with psi jointly convex.

    ``starts(X)`` yields initial W arrays and ``scale(X)`` the initial
    search widths.
    """

    def __init__(self, dim, wdim, psi, starts, scale, tail, symmetric=False, tag="min", config: Config = DEFAULT):
        self.dim, self.wdim = dim, wdim
        self.psi, self.starts, self.scale = psi, starts, scale
        self.tail = tail
        self.symmetric = symmetric
        self.tag = tag
        self.config = config
        self._descent_config = config.replace(
            golden_iters=config.fn_golden_iters,
            descent_obj_tol=config.fn_descent_tol,
            descent_max_sweeps=config.fn_descent_max_sweeps,
        )

    def _phi(self, X):
        if self.wdim == 0:
            return self.psi(X, np.zeros((len(X), 0)))
        out = np.empty(len(X))
        step = 4096
        for s in range(0, len(X), step):
            Xs = X[s : s + step]
            _, v = convex_descent(
                lambda W, rows: self.psi(Xs[rows], W), self.starts(Xs), self.scale(Xs), rng=0,
                config=self._descent_config, indexed=True,
            )
            out[s : s + step] = v
        return out


def _row_scale(X, f):
    return 0.5 * np.linalg.norm(X, axis=1) + 0.5 * f.tail[0] + 1e-3


# ---------------------------------------------------------------------------
# operators


def delta_out(f: LogConcaveFn) -> LogConcaveFn:
    """sup sqrt(f(x1) f(-x2)) over x = (x1 + x2)/2.

    With x2 = 2x - x1 the exponent is (phi(x1) + phi(x1 - 2x)) / 2, convex
    in (x, x1).
    """
    if isinstance(f, IndicatorFn):
        D = minkowski_diff_body(f.body)
        return IndicatorFn(LinearImageBody(D, 0.5 * np.eye(f.dim)), tag=f"delta_out({f.tag})")
    n = f.dim
    rho, beta = f.tail
    if isinstance(f, MinFn):
        raise FunctionError("delta_out of an infimal function is not supported")

    def psi(X, W):
        return 0.5 * (f._phi(W) + f._phi(W - 2 * X))

    return MinFn(
        n, n, psi,
        starts=lambda X: [X.copy(), np.zeros_like(X), 2 * X],
        scale=lambda X: _row_scale(X, f),
        # one of |x1|, |x1 - 2x| is at least |x|
        tail=(rho, beta / 2),
        symmetric=True,
        tag=f"delta_out({f.tag})",
    )


def delta_in(f: LogConcaveFn) -> LogConcaveFn:
    if isinstance(f, IndicatorFn):
        return IndicatorFn(inner_reg(f.body), tag=f"delta_in({f.tag})")
    return MaxSymFn(f)


def delta_zero(f: LogConcaveFn) -> LogConcaveFn:
    """sup f(x1) f(x2) over x = x1 - x2."""
    if isinstance(f, IndicatorFn):
        return IndicatorFn(minkowski_diff_body(f.body), tag=f"delta_zero({f.tag})")
    n = f.dim
    rho, beta = f.tail

    def psi(X, W):
        return f._phi(W) + f._phi(W - X)

    return MinFn(
        n, n, psi,
        starts=lambda X: [0.5 * X, X.copy(), np.zeros_like(X)],
        scale=lambda X: _row_scale(X, f),
        tail=(2 * rho, beta / 2),
        symmetric=True,
        tag=f"delta_zero({f.tag})",
    )


def functional_projection(g: LogConcaveFn, H: Subspace) -> LogConcaveFn:
    """(P_H g)(z) = sup_{y in H^perp} g(Bz + y), as a function on R^k."""
    if H.n != g.dim:
        raise FunctionError("subspace lives in the wrong dimension")
    if H.k == H.n:
        return g
    if isinstance(g, IndicatorFn):
        return IndicatorFn(project(g.body, H), tag=f"P_H({g.tag})")
    B, C = H.basis, H.complement().basis
    m = C.shape[1]
    tag = f"P_H({g.tag})"
    if isinstance(g, MinFn):
        def psi(Z, W):
            return g.psi(Z @ B.T + W[:, :m] @ C.T, W[:, m:])

        def starts(Z):
            X = Z @ B.T
            return [np.hstack([np.zeros((len(Z), m)), w]) for w in g.starts(X)]

        return MinFn(H.k, m + g.wdim, psi, starts, lambda Z: g.scale(Z @ B.T), g.tail, g.symmetric, tag, g.config)

    def psi(Z, W):
        return g._phi(Z @ B.T + W @ C.T)

    return MinFn(
        H.k, m, psi,
        starts=lambda Z: [np.zeros((len(Z), m))],
        scale=lambda Z: _row_scale(Z, g),
        tail=g.tail,
        symmetric=g.symmetric,
        tag=tag,
    )


def restrict(g: LogConcaveFn, H: Subspace) -> LogConcaveFn:
    """g restricted to H, in H's coordinates."""
    B = H.basis
    if isinstance(g, IndicatorFn):
        from .body import section

        return IndicatorFn(section(g.body, H), tag=f"restrict({g.tag})")
    if isinstance(g, MinFn):
        return MinFn(H.k, g.wdim, lambda Z, W: g.psi(Z @ B.T, W), lambda Z: g.starts(Z @ B.T),
                     lambda Z: g.scale(Z @ B.T), g.tail, g.symmetric, f"restrict({g.tag})", g.config)
    return MinFn(H.k, 0, lambda Z, W: g._phi(Z @ B.T), lambda Z: [], lambda Z: np.ones(len(Z)),
                 g.tail, g.symmetric, f"restrict({g.tag})")


# ---------------------------------------------------------------------------
# radial integrals along rays


def _ray_certificate(f: LogConcaveFn, U: np.ndarray):
    """Per-direction (r1, r0, slope) with r0 = 2 r1, phi(r1 u) <= 1 < phi(r0 u)
    and, by convexity along the ray, phi(t u) >= slope * t for t >= r0."""
    N = len(U)
    r = np.ones(N)
    inside = f._phi(U) <= 1.0
    lo = np.where(inside, r, 0.0)
    hi = np.where(inside, np.inf, r)
    for _ in range(100):
        up = ~np.isfinite(hi)
        down = lo == 0
        if not (up.any() or down.any()):
            break
        r = np.where(up, 2 * lo, np.where(down, 0.5 * hi, 1.0))
        rows = up | down
        ok = f._phi(r[rows, None] * U[rows]) <= 1.0
        idx = np.flatnonzero(rows)
        u_ok, u_bad = idx[ok & up[rows]], idx[~ok & up[rows]]
        d_ok, d_bad = idx[ok & down[rows]], idx[~ok & down[rows]]
        lo[u_ok] = r[u_ok]
        hi[u_bad] = r[u_bad]
        lo[d_ok] = r[d_ok]
        hi[d_bad] = r[d_bad]
    if not np.all(np.isfinite(hi)) or np.any(lo == 0):
        raise NumericsError("could not bracket phi = 1 along a ray")
    slope = f._phi(hi[:, None] * U) / hi
    return lo, hi, slope


def _tail_cutoff(p, slope, r0, target):
    """Smallest R >= r0 with int_R^inf p t^{p-1} e^{-slope t} dt <= target."""
    y = target * slope**p / (p * math.exp(special.gammaln(p)))
    y = np.clip(y, 1e-300, 1.0)
    R = special.gammainccinv(p, y) / slope
    return np.maximum(R, r0)


def ball_body_radial(f: LogConcaveFn, p: float, xi, tol: float | None = None, config: Config = DEFAULT) -> float:
    """rho_{K_p(f)}(xi) = (int_0^inf p r^{p-1} f(r xi) dr)^{1/p}, adaptively."""
    if p <= 0:
        raise ValueError("p must be positive")
    xi = np.asarray(xi, dtype=float).ravel()
    if isinstance(f, IndicatorFn):
        return float(f.body.radial(xi))
    tol = config.radial_rel_tol if tol is None else tol
    U = xi[None, :]
    r1, r0, slope = _ray_certificate(f, U)
    lower = math.exp(-1.0) * float(r1[0]) ** p  # f >= e^{-1} on [0, r1]

    def g(r):
        return p * r ** (p - 1) * math.exp(-float(f._phi(r * U)[0])) if r > 0 else (p if p == 1 else 0.0)

    cutoff = float(_tail_cutoff(p, slope, r0, 1e-3 * tol * lower)[0])
    try:
        val = quad_1d(g, 0.0, cutoff, tol * 1e-2, config=config)
    except QuadratureError:
        # split at the shoulder r0 where phi crosses 1
        val = quad_1d(g, 0.0, float(r0[0]), tol * 1e-2, config=config) + quad_1d(
            g, float(r0[0]), cutoff, tol * 1e-2, config=config
        )
    return val ** (1.0 / p)


def ball_body_radial_membership(f: IndicatorFn, p: float, xi, config: Config = DEFAULT) -> float:
    """rho_{K_p(1_K)}(xi) from membership queries alone.

    The boundary crossing along the ray is bisected on f > 0, then
    p r^{p-1} is integrated up to it; an independent route to K_p(1_K) = K.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    lo, hi = 0.0, f.body.r_out * (1 + 1e-9) / np.linalg.norm(xi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if np.isfinite(f._phi(mid * xi[None, :])[0]):
            lo = mid
        else:
            hi = mid
    val = quad_1d(lambda r: p * r ** (p - 1), 0.0, lo, config.quad_rel_tol, config=config)
    return val ** (1.0 / p)


def ball_body_radial_batch(f: LogConcaveFn, p: float, U, config: Config = DEFAULT) -> np.ndarray:
    """Vectorised radial function of K_p(f) by graded Gauss-Legendre panels."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if isinstance(f, IndicatorFn):
        return f.body.radial(U)
    r1, r0, slope = _ray_certificate(f, U)
    lower = math.exp(-1.0) * r1**p
    R = _tail_cutoff(p, slope, r0, 1e-3 * config.radial_rel_tol * lower)
    # panels on [0, r0] and [r0, R]: the mass sits below r0
    out = np.zeros(len(U))
    for a, b in ((np.zeros_like(r0), r0), (r0, R)):
        t, w = panel_nodes(b - a, config.batch_quad_nodes, config.batch_quad_panels, grading=1.0 if a is r0 else 1.5)
        t = t + a[:, None]
        N, m = t.shape
        X = (t[:, :, None] * U[:, None, :]).reshape(-1, f.dim)
        vals = np.exp(-f._phi(X)).reshape(N, m)
        out += np.sum(w * p * t ** (p - 1) * vals, axis=1)
    return out ** (1.0 / p)


def level_body_radial(f: LogConcaveFn, p: float, xi) -> float:
    """rho_{R_p(f)}(xi): the radius where phi(t xi) reaches p - 1."""
    if p <= 1:
        raise ValueError("level bodies need p > 1")
    xi = np.asarray(xi, dtype=float).ravel()
    if isinstance(f, IndicatorFn):
        return float(f.body.radial(xi))
    rho, beta = f.tail
    hi = max(rho, (p - 1) / beta) * (1 + 1e-9)

    def g(t):
        return float(f._phi(t * xi[None, :])[0])

    return root_find_increasing(g, p - 1, (0.0, hi))


def level_body_radial_batch(f: LogConcaveFn, p: float, U, steps: int = 60) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if isinstance(f, IndicatorFn):
        return f.body.radial(U)
    rho, beta = f.tail
    lo = np.zeros(len(U))
    hi = np.full(len(U), max(rho, (p - 1) / beta) * (1 + 1e-9))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = f._phi(mid[:, None] * U) < p - 1
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _kp_outer_radius(f: LogConcaveFn, p: float) -> float:
    rho, beta = f.tail
    q = max(p, 2.0)  # K_p is inside K_q for p < q
    return KAPPA_BALL_BODY * max(rho, (q - 1) / beta)


def ball_body(f: LogConcaveFn, p: float, config: Config = DEFAULT) -> ConvexBody:
    """K_p(f) as a body exposing its gauge."""
    if isinstance(f, IndicatorFn):
        return f.body
    K = RadialBody(f.dim, lambda U: ball_body_radial_batch(f, p, U, config), 0.0, _kp_outer_radius(f, p),
                   f.symmetric, tag=f"K_{p:g}({f.tag})")
    K.r_in = probe_inradius(K)
    return K


def ball_body_out_hull(f: LogConcaveFn, p: float, n_directions: int = 2000, rng=0,
                       config: Config = DEFAULT) -> HullPolytope:
    """Inner polytope approximation of K_p(f)_out = conv(K_p(f), -K_p(f)).

    Boundary points rho(theta) theta of K_p(f) are taken along random
    directions and reflected; the hull converges to K_p(f)_out from inside
    as the direction count grows.
    """
    U = sphere_directions(f.dim, n_directions, as_stream(rng).child("kp-hull"))
    P = ball_body_radial_batch(f, p, U, config)[:, None] * U
    return HullPolytope(np.vstack([P, -P]), tag=f"hull(K_{p:g}({f.tag})_out)")


def level_body(f: LogConcaveFn, p: float) -> ConvexBody:
    """R_p(f) as a body exposing its gauge."""
    if isinstance(f, IndicatorFn):
        return f.body
    rho, beta = f.tail
    K = RadialBody(f.dim, lambda U: level_body_radial_batch(f, p, U), 0.0, max(rho, (p - 1) / beta),
                   f.symmetric, tag=f"R_{p:g}({f.tag})")
    K.r_in = probe_inradius(K)
    return K


# ---------------------------------------------------------------------------
# one-dimensional lemma quantities


def lemma631_quantities(g, p: float, iters: int = 200) -> tuple[float, float]:
    """(M_p, t_p) with t_p maximising t^{p-1} e^{-g(t)}.

    ``g`` is convex increasing with g(0) = 0.  The search runs on
    u = ln t, where (p-1) u - g(e^u) is concave, by golden section.
    """
    if p <= 1:
        raise ValueError("need p > 1")

    def h(u):
        return (p - 1) * u - g(math.exp(u))

    # bracket: walk outward until the objective drops on both sides
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if h(hi) < h(hi - 0.5):
            break
        hi += 2.0
    else:
        raise NumericsError("bracket search failed (g grows too slowly)")
    for _ in range(200):
        if h(lo) < h(lo + 0.5):
            break
        lo -= 2.0
    else:
        raise NumericsError("bracket search failed near 0")
    mid = 0.5 * (lo + hi)

    def obj(U):
        return np.array([-h(float(u)) for u in U[:, 0]])

    t, _ = golden_line_search(obj, np.array([[mid]]), np.array([1.0]), np.array([0.5 * (hi - lo)]), iters)
    u = mid + float(t[0])
    tp = math.exp(u)
    return math.exp(h(u)), tp


# ---------------------------------------------------------------------------
# integrals over subspaces


def integral_on_subspace(g: LogConcaveFn, H: Subspace | None = None, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """int_H g = vol_k(K_k(g) n H) = omega_k E[rho_{K_k(g)}(xi)^k], xi uniform in S_H.

    With ``H=None`` the integral is over the whole space of ``g``.
    """
    n = g.dim
    k = n if H is None else H.k
    budget = config.mc_directions if budget is None else int(budget)
    U = sphere_directions(k, budget, as_stream(rng).child("int-H"))
    X = U if H is None else U @ H.basis.T
    rk = np.empty(len(X))
    step = 512
    for s in range(0, len(X), step):
        rk[s : s + step] = ball_body_radial_batch(g, k, X[s : s + step], config) ** k
    w = unit_ball_volume(k)
    se = float(np.std(rk, ddof=1) / math.sqrt(len(rk)))
    return Estimate(w * float(rk.mean()), w * se, len(rk), _seed(rng), "ball-body-radial")


# ---------------------------------------------------------------------------
# JSON function descriptions


def parse_function(node, path: str = "") -> LogConcaveFn:
    """Build a function from ``{"type": "gaussian" | "lp_exp" | "indicator" | "shift_center", ...}``."""
    if not isinstance(node, dict) or "type" not in node:
        raise BodySpecError(path, "function description needs a 'type'")
    kind = node["type"]
    try:
        if kind == "gaussian":
            if "cov" in node:
                return GaussianFn(node["cov"])
            n = node.get("n")
            if not isinstance(n, int) or n < 1:
                raise BodySpecError(f"{path}/n", "gaussian needs 'cov' or a positive 'n'")
            return GaussianFn(float(node.get("sigma", 1.0)) ** 2 * np.eye(n))
        if kind == "lp_exp":
            n = node.get("n")
            if not isinstance(n, int) or n < 1:
                raise BodySpecError(f"{path}/n", "expected a positive integer")
            return LpExpFn(n, float(node.get("p", 2.0)))
        if kind == "indicator":
            if "body" not in node:
                raise BodySpecError(path, "missing field 'body'")
            return IndicatorFn(parse_body(node["body"], f"{path}/body"))
        if kind == "shift_center":
            if "inner" not in node or "shift" not in node:
                raise BodySpecError(path, "shift_center needs 'inner' and 'shift'")
            inner = parse_function(node["inner"], f"{path}/inner")
            return ShiftCenterFn(inner, node["shift"])
    except BodySpecError:
        raise
    except (FunctionError, ValueError) as exc:
        raise BodySpecError(path, str(exc)) from None
    raise BodySpecError(f"{path}/type", f"unknown function type {kind!r}")


def load_function(source) -> LogConcaveFn:
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        return parse_function(json.loads(Path(source).read_text()))
    if isinstance(source, str):
        return parse_function(json.loads(source))
    return parse_function(source)
