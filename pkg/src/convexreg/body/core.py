"""Convex bodies as support/gauge oracles.

Every body answers batched queries: ``support(U)`` and ``gauge(X)`` take an
``(N, d)`` array (or a single vector) and return the matching values.
Bodies are immutable; the only internal state is memoised LP structure
keyed on the body itself.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import DEFAULT
from ..numerics import Subspace, convex_descent
from . import lift as lifts


class BodyError(ValueError):
    """Invalid body construction."""


class DegenerateBodyError(BodyError):
    """The origin is not an interior point, or the body is flat."""


def _rows(a, d: int) -> tuple[np.ndarray, bool]:
    a = np.asarray(a, dtype=float)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if a.shape[1] != d:
        raise ValueError(f"expected vectors of dimension {d}, got {a.shape[1]}")
    return a, single


class ConvexBody:
    """Base class.  Subclasses implement ``_support`` / ``_gauge`` on 2-D arrays."""

    dim: int
    r_in: float
    r_out: float
    symmetric: bool = False
    tag: str = "body"

    # -- public oracles -----------------------------------------------------
    def support(self, U):
        U, single = _rows(U, self.dim)
        out = self._support(U)
        return float(out[0]) if single else out

    def gauge(self, X):
        X, single = _rows(X, self.dim)
        out = self._gauge(X)
        return float(out[0]) if single else out

    def radial(self, X):
        """rho_K(x) = 1 / p_K(x)."""
        X, single = _rows(X, self.dim)
        out = 1.0 / self._gauge(X)
        return float(out[0]) if single else out

    def contains(self, X, tol: float = 0.0):
        return self.gauge(X) <= 1.0 + tol

    # -- structure ----------------------------------------------------------
    def lift(self):
        """Exact polyhedral representation, or ``None``."""
        return None

    def polar_lift(self):
        L = self.lift()
        if L is None:
            return None
        key = "_polar_lift"
        if key not in self.__dict__:
            self.__dict__[key] = lifts.polar(L)
        return self.__dict__[key]

    def _lp_support(self, U):
        L = self.lift()
        if L is None:
            raise NotImplementedError(f"{self.tag}: no exact support route")
        return L.support(U)

    def _lp_gauge(self, X):
        L = self.polar_lift()
        if L is None:
            raise NotImplementedError(f"{self.tag}: no exact gauge route")
        return np.maximum(L.support(X), 0.0)

    def _support(self, U):
        return self._lp_support(U)

    def _gauge(self, X):
        return self._lp_gauge(X)

    def support_points(self, U):
        """(h_K(U), P) with P[i] in K attaining the support, or None."""
        L = self.lift()
        if L is None:
            return None
        return L.support_points(np.atleast_2d(U))

    def gauge_subgradient(self, X):
        """(p_K(X), Y) with Y[i] in K° and <Y[i], X[i]> = p_K(X[i]), or None.

        Available whenever the polar has an LP route; the maximiser of the
        polar support LP is a subgradient of the gauge.
        """
        L = self.polar_lift()
        if L is None:
            return None
        vals, Y = L.support_points(np.atleast_2d(X))
        return np.maximum(vals, 0.0), Y

    def check_radii(self):
        if not (self.r_in > 0 and math.isfinite(self.r_out)):
            raise DegenerateBodyError(f"{self.tag}: inner radius {self.r_in!r} must be positive")
        if self.r_in < DEFAULT.min_inradius_ratio * self.r_out and not self.symmetric:
            raise DegenerateBodyError(f"{self.tag}: origin too close to the boundary")

    def __repr__(self):
        return f"<{type(self).__name__} {self.tag} dim={self.dim}>"


def probe_inradius(body: ConvexBody, frames: int = 4, seed: int = 0) -> float:
    """Certified lower bound on the largest centred ball inside ``body``.

    The points ±e_i / p(±e_i) of any orthonormal frame lie in the body, so
    the cross-polytope they span (with half-axes the smaller of each pair)
    does too; its inradius is 1 / sqrt(sum a_i^-2).  The best of a few
    random frames is returned.
    """
    d = body.dim
    gen = np.random.default_rng(seed)
    best = 0.0
    for f in range(frames):
        Q = np.eye(d) if f == 0 else np.linalg.qr(gen.standard_normal((d, d)))[0]
        g = body.gauge(np.vstack([Q.T, -Q.T]))
        g = np.maximum(g[:d], g[d:])
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            continue
        best = max(best, 1.0 / math.sqrt(float(np.sum(g**2))))
    return best


# ---------------------------------------------------------------------------
# polytopes


class VPolytope(ConvexBody):
    """conv of a vertex list; the origin must be an interior point."""

    def __init__(self, vertices, tag: str = "vpolytope", check: bool = True):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < V.shape[1] + 1:
            raise BodyError("need at least n+1 vertices in R^n")
        if not np.all(np.isfinite(V)):
            raise BodyError("vertices must be finite")
        n = V.shape[1]
        if np.linalg.matrix_rank(V[1:] - V[0], tol=1e-10 * max(1.0, np.abs(V).max())) < n:
            raise DegenerateBodyError("vertices do not span R^n affinely")
        V.setflags(write=False)
        self.vertices = V
        self.dim = n
        self.tag = tag
        self.r_out = float(np.linalg.norm(V, axis=1).max())
        self.symmetric = _is_symmetric_set(V)
        if check:
            try:
                self.r_in = probe_inradius(self)
            except Exception as exc:  # unbounded gauge LP: origin on boundary/outside
                raise DegenerateBodyError(f"origin is not interior: {exc}") from None
            self.check_radii()
        else:
            self.r_in = float("nan")

    def lift(self):
        if "_lift" not in self.__dict__:
            self._lift = lifts.vpoly(self.vertices)
        return self._lift

    def polar_lift(self):
        if "_plift" not in self.__dict__:
            self._plift = lifts.hpoly(self.vertices, np.ones(len(self.vertices)))
        return self._plift

    def _support(self, U):
        return (U @ self.vertices.T).max(axis=1)

    def support_points(self, U):
        U = np.atleast_2d(U)
        S = U @ self.vertices.T
        i = S.argmax(axis=1)
        return S[np.arange(len(U)), i], self.vertices[i]


class HullPolytope(ConvexBody):
    """conv of a point cloud, with facets from Qhull.

    Restricted to dimensions 2 and 3, where hulls of many points are cheap
    and the facet list makes the gauge a closed form (max over facets).
    """

    def __init__(self, points, tag: str = "hull"):
        from scipy.spatial import ConvexHull, QhullError

        P = np.array(points, dtype=float)
        if P.ndim != 2 or P.shape[0] < P.shape[1] + 1:
            raise BodyError("need at least n+1 points in R^n")
        if P.shape[1] not in (2, 3):
            raise BodyError("facet hulls are only built in dimensions 2 and 3")
        try:
            hull = ConvexHull(P)
        except QhullError as exc:
            raise DegenerateBodyError(f"hull is degenerate: {exc}") from None
        # qhull facets: normal . x + offset <= 0
        A, b = hull.equations[:, :-1], -hull.equations[:, -1]
        if b.min() <= 0:
            raise DegenerateBodyError("origin is not interior to the hull")
        self.A = A / b[:, None]
        self.vertices = P[hull.vertices]
        self.dim = P.shape[1]
        self.tag = tag
        self.r_out = float(np.linalg.norm(self.vertices, axis=1).max())
        self.r_in = float((1.0 / np.linalg.norm(self.A, axis=1)).min())
        self.symmetric = _is_symmetric_set(self.vertices)
        self.check_radii()

    def lift(self):
        if "_lift" not in self.__dict__:
            self._lift = lifts.hpoly(self.A, np.ones(len(self.A)))
        return self._lift

    def _support(self, U):
        return (U @ self.vertices.T).max(axis=1)

    def _gauge(self, X):
        return np.maximum((X @ self.A.T).max(axis=1), 0.0)


def _is_symmetric_set(V: np.ndarray) -> bool:
    key = lambda rows: np.lexsort(np.round(rows, 12).T[::-1])  # noqa: E731
    a = V[key(V)]
    b = -V
    b = b[key(b)]
    return bool(a.shape == b.shape and np.allclose(a, b, atol=1e-12))


# ---------------------------------------------------------------------------
# analytic bodies


class Ellipsoid(ConvexBody):
    """E = A B_2^n for invertible A; a ball when A = r I."""

    def __init__(self, A, tag: str = "ellipsoid"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise BodyError("ellipsoid matrix must be square")
        s = np.linalg.svd(A, compute_uv=False)
        if s.min() <= 1e-12 * s.max():
            raise DegenerateBodyError("ellipsoid matrix is singular")
        self.A = A
        self.Ainv = np.linalg.inv(A)
        self.dim = A.shape[0]
        self.r_in, self.r_out = float(s.min()), float(s.max())
        self.symmetric = True
        self.tag = tag

    def _support(self, U):
        return np.linalg.norm(U @ self.A, axis=1)

    def _gauge(self, X):
        return np.linalg.norm(X @ self.Ainv.T, axis=1)

    def gauge_subgradient(self, X):
        Z = X @ self.Ainv.T
        g = np.linalg.norm(Z, axis=1)
        Y = (Z / np.where(g > 0, g, 1.0)[:, None]) @ self.Ainv
        return g, Y

    def shape_matrix(self) -> np.ndarray:
        """A A^T (what the support function sees)."""
        return self.A @ self.A.T


def ball(n: int, radius: float = 1.0) -> Ellipsoid:
    if radius <= 0:
        raise BodyError("radius must be positive")
    return Ellipsoid(radius * np.eye(n), tag=f"ball({radius:g})")


class LpBall(ConvexBody):
    """scale * B_p^n, 1 <= p <= inf."""

    def __init__(self, n: int, p: float, scale: float = 1.0, tag: str | None = None):
        if p < 1:
            raise BodyError("p must be >= 1")
        if scale <= 0:
            raise BodyError("scale must be positive")
        self.dim, self.p, self.scale = n, float(p), float(scale)
        self.q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        self.symmetric = True
        self.tag = tag or f"lp_ball(p={p:g},a={scale:g})"
        # |x|_p <= n^{max(0, 1/p - 1/2)} |x|_2 and |x|_2 <= n^{max(0, 1/2 - 1/p)} |x|_p
        ip = 0.0 if math.isinf(p) else 1.0 / p
        self.r_in = scale * n ** (-max(0.0, ip - 0.5))
        self.r_out = scale * n ** (max(0.0, 0.5 - ip))

    def _support(self, U):
        return self.scale * np.linalg.norm(U, ord=self.q, axis=1)

    def _gauge(self, X):
        return np.linalg.norm(X, ord=self.p, axis=1) / self.scale

    def gauge_subgradient(self, X):
        g = self._gauge(X)
        S = np.sign(X)
        if math.isinf(self.p):
            Y = np.zeros_like(X)
            i = np.argmax(np.abs(X), axis=1)
            Y[np.arange(len(X)), i] = S[np.arange(len(X)), i]
        elif self.p == 1:
            Y = S
        else:
            # gradient of |x|_p: sign(x) |x|^{p-1} / |x|_p^{p-1}
            nrm = np.where(g > 0, g * self.scale, 1.0)[:, None]
            Y = S * (np.abs(X) / nrm) ** (self.p - 1)
        return g, Y / self.scale

    def lift(self):
        n, a = self.dim, self.scale
        if math.isinf(self.p):
            return lifts.hpoly(np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, a))
        if self.p == 1:
            return lifts.vpoly(np.vstack([a * np.eye(n), -a * np.eye(n)]))
        return None

    def polar_lift(self):
        n, a = self.dim, self.scale
        if math.isinf(self.p):
            return lifts.vpoly(np.vstack([np.eye(n), -np.eye(n)]) / a)
        if self.p == 1:
            return lifts.hpoly(np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, 1.0 / a))
        return None

    def vertices(self) -> np.ndarray:
        """Vertex list for the polyhedral cases (cube has 2^n vertices)."""
        n, a = self.dim, self.scale
        if self.p == 1:
            return np.vstack([a * np.eye(n), -a * np.eye(n)])
        if math.isinf(self.p):
            grid = np.array(np.meshgrid(*[[-a, a]] * n, indexing="ij")).reshape(n, -1).T
            return grid
        raise BodyError("only p in {1, inf} have vertices")


def cube(n: int, a: float = 1.0) -> LpBall:
    """[-a, a]^n."""
    return LpBall(n, math.inf, a, tag=f"cube({a:g})")


def cross_polytope(n: int, a: float = 1.0) -> LpBall:
    return LpBall(n, 1.0, a, tag=f"cross({a:g})")


# ---------------------------------------------------------------------------
# derived bodies


class PolarBody(ConvexBody):
    def __init__(self, K: ConvexBody):
        if not K.r_in > 0:
            raise DegenerateBodyError("polar needs the origin in the interior")
        self.K = K
        self.dim = K.dim
        self.r_in, self.r_out = 1.0 / K.r_out, 1.0 / K.r_in
        self.symmetric = K.symmetric
        self.tag = f"polar({K.tag})"

    def _support(self, U):
        return self.K._gauge(U)

    def _gauge(self, X):
        return self.K._support(X)

    def lift(self):
        return self.K.polar_lift()

    def polar_lift(self):
        return self.K.lift()

    def gauge_subgradient(self, X):
        return self.K.support_points(X)


class OuterBody(ConvexBody):
    """conv(K, -K)."""

    def __init__(self, K: ConvexBody):
        self.K = K
        self.dim = K.dim
        self.r_in, self.r_out = K.r_in, K.r_out
        self.symmetric = True
        self.tag = f"outer({K.tag})"

    def _support(self, U):
        return np.maximum(self.K._support(U), self.K._support(-U))

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.conv_union(L, lifts.negate(L))

    def _gauge(self, X):
        if self.lift() is not None:
            return self._lp_gauge(X)
        # p_{conv(K u -K)}(x) = min_y p_K(y) + p_K(y - x)
        d = self.dim

        def obj(Y, rows):
            return self.K._gauge(Y) + self.K._gauge(Y - X[rows])

        scale = np.linalg.norm(X, axis=1) * self.K.r_out / self.K.r_in + 1e-12
        _, val = convex_descent(obj, [X.copy(), np.zeros_like(X), 0.5 * X], scale, indexed=True)
        return val


class InnerBody(ConvexBody):
    """K n (-K)."""

    def __init__(self, K: ConvexBody):
        self.K = K
        self.dim = K.dim
        self.r_in, self.r_out = K.r_in, K.r_out
        self.symmetric = True
        self.tag = f"inner({K.tag})"

    def _gauge(self, X):
        return np.maximum(self.K._gauge(X), self.K._gauge(-X))

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.intersection(L, lifts.negate(L))

    def _support(self, U):
        if self.lift() is not None:
            return self._lp_support(U)

        # h_{K n -K}(u) = min_v h_K(v) + h_K(v - u)
        def obj(Vv, rows):
            return self.K._support(Vv) + self.K._support(Vv - U[rows])

        scale = np.linalg.norm(U, axis=1) + 1e-12
        _, val = convex_descent(obj, [U.copy(), np.zeros_like(U), 0.5 * U], scale, indexed=True)
        return val


class SectionBody(ConvexBody):
    """K n H in the coordinates of H's basis."""

    def __init__(self, K: ConvexBody, H: Subspace):
        if H.n != K.dim:
            raise BodyError("subspace lives in the wrong ambient dimension")
        self.K, self.H = K, H
        self.B = H.basis
        self.dim = H.k
        self.r_in, self.r_out = K.r_in, K.r_out
        self.symmetric = K.symmetric
        self.tag = f"section({K.tag},k={H.k})"

    def _gauge(self, Z):
        return self.K._gauge(Z @ self.B.T)

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.section(L, self.B)

    def _support(self, W):
        if self.lift() is not None:
            return self._lp_support(W)
        if self.H.k == self.H.n:
            return self.K._support(W @ self.B.T)
        C = self.H.complement().basis
        base = W @ self.B.T

        # h_{K n H}(w) = min_{y perp H} h_K(Bw + y)
        def obj(Y, rows):
            return self.K._support(base[rows] + Y @ C.T)

        scale = np.linalg.norm(W, axis=1) * self.K.r_out / self.K.r_in + 1e-12
        _, val = convex_descent(obj, [np.zeros((W.shape[0], C.shape[1]))], scale, indexed=True)
        return val


class ProjectionBody(ConvexBody):
    """P_H(K) in the coordinates of H's basis."""

    def __init__(self, K: ConvexBody, H: Subspace):
        if H.n != K.dim:
            raise BodyError("subspace lives in the wrong ambient dimension")
        self.K, self.H = K, H
        self.B = H.basis
        self.dim = H.k
        self.r_in, self.r_out = K.r_in, K.r_out
        self.symmetric = K.symmetric
        self.tag = f"project({K.tag},k={H.k})"

    def _support(self, W):
        return self.K._support(W @ self.B.T)

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.project(L, self.B)

    def _gauge(self, Z):
        if self.dim == 1:
            # a segment [-h(-b), h(b)]
            hp = self.K._support(self.B.T)[0]
            hm = self.K._support(-self.B.T)[0]
            z = Z[:, 0]
            return np.where(z >= 0, z / hp, -z / hm)
        if self.lift() is not None:
            return self._lp_gauge(Z)
        if self.H.k == self.H.n:
            return self.K._gauge(Z @ self.B.T)
        C = self.H.complement().basis
        base = Z @ self.B.T

        # p_{P_H K}(z) = min_{y perp H} p_K(Bz + y)
        def obj(Y, rows):
            return self.K._gauge(base[rows] + Y @ C.T)

        scale = np.linalg.norm(Z, axis=1) * self.K.r_out / self.K.r_in + 1e-12
        _, val = convex_descent(obj, [np.zeros((Z.shape[0], C.shape[1]))], scale, indexed=True)
        return val


class LinearImageBody(ConvexBody):
    def __init__(self, K: ConvexBody, T):
        T = np.atleast_2d(np.asarray(T, dtype=float))
        if T.shape != (K.dim, K.dim):
            raise BodyError("linear map has wrong shape")
        s = np.linalg.svd(T, compute_uv=False)
        if s.min() <= 1e-12 * s.max():
            raise BodyError("linear map is singular")
        self.K, self.T = K, T
        self.Tinv = np.linalg.inv(T)
        self.dim = K.dim
        self.r_in, self.r_out = K.r_in * s.min(), K.r_out * s.max()
        self.symmetric = K.symmetric
        self.tag = f"linear({K.tag})"

    def _support(self, U):
        return self.K._support(U @ self.T)

    def _gauge(self, X):
        return self.K._gauge(X @ self.Tinv.T)

    def gauge_subgradient(self, X):
        r = self.K.gauge_subgradient(np.atleast_2d(X) @ self.Tinv.T)
        if r is None:
            return None
        g, Y = r
        return g, Y @ self.Tinv

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.linear(L, self.T)

    def polar_lift(self):
        L = self.K.polar_lift()
        return None if L is None else lifts.linear(L, self.Tinv.T)


class TranslateBody(ConvexBody):
    """K + z; its gauge is only defined while 0 stays interior."""

    def __init__(self, K: ConvexBody, z):
        z = np.asarray(z, dtype=float).ravel()
        if z.size != K.dim:
            raise BodyError("shift has wrong dimension")
        self.K, self.z = K, z
        self.dim = K.dim
        self.r_out = K.r_out + float(np.linalg.norm(z))
        self.symmetric = False
        self.tag = f"translate({K.tag})"
        self.r_in = K.r_in - float(np.linalg.norm(z))
        if self.r_in <= 0:
            self.r_in = probe_inradius(self)
        self.check_radii()

    def _support(self, U):
        return self.K._support(U) + U @ self.z

    def lift(self):
        L = self.K.lift()
        return None if L is None else lifts.translate(L, self.z)

    def _gauge(self, X):
        if self.lift() is not None:
            return self._lp_gauge(X)
        if isinstance(self.K, Ellipsoid):
            a = X @ self.K.Ainv.T
            c = self.K.Ainv @ self.z
            cc = c @ c
            if cc >= 1:
                raise DegenerateBodyError("origin left the translated ellipsoid")
            ac = a @ c
            aa = np.einsum("ij,ij->i", a, a)
            return (-ac + np.sqrt(ac**2 + (1 - cc) * aa)) / (1 - cc)
        # x in t(K + z)  iff  p_K(s x - z) <= 1 with s = 1/t; bisect on s
        norms = np.linalg.norm(X, axis=1)
        lo = np.zeros(len(X))
        hi = np.where(norms > 0, 2 * self.r_out / np.maximum(norms, 1e-300) + 1.0, 1.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            inside = self.K._gauge(mid[:, None] * X - self.z) <= 1.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return np.where(norms > 0, 1.0 / (0.5 * (lo + hi)), 0.0)


class SumBody(ConvexBody):
    """K1 + K2 (Minkowski)."""

    def __init__(self, K1: ConvexBody, K2: ConvexBody, tag: str | None = None):
        if K1.dim != K2.dim:
            raise BodyError("summands have different dimensions")
        self.K1, self.K2 = K1, K2
        self.dim = K1.dim
        self.r_in, self.r_out = K1.r_in + K2.r_in, K1.r_out + K2.r_out
        self.symmetric = False
        self.tag = tag or f"sum({K1.tag},{K2.tag})"

    def _support(self, U):
        return self.K1._support(U) + self.K2._support(U)

    def lift(self):
        L1, L2 = self.K1.lift(), self.K2.lift()
        return None if L1 is None or L2 is None else lifts.minkowski_sum(L1, L2)

    def _gauge(self, X):
        if self.lift() is not None:
            return self._lp_gauge(X)

        # p_{A+B}(x) = min_y max(p_A(y), p_B(x - y))
        def obj(Y, rows):
            return np.maximum(self.K1._gauge(Y), self.K2._gauge(X[rows] - Y))

        scale = np.linalg.norm(X, axis=1) + 1e-12
        _, val = convex_descent(obj, [0.5 * X], scale, rng=0, extra_dirs=self.dim, indexed=True)
        return val


class DifferenceBody(SumBody):
    """K - K."""

    def __init__(self, K: ConvexBody):
        super().__init__(K, LinearImageBody(K, -np.eye(K.dim)), tag=f"diff({K.tag})")
        self.symmetric = True

    def _support(self, U):
        return self.K1._support(U) + self.K1._support(-U)


class RadialBody(ConvexBody):
    """Star body given by a batched radial function on unit vectors.

    Used for Ball's bodies, which are convex; only the gauge is exact.
    """

    def __init__(self, dim: int, radial_fn, r_in: float, r_out: float, symmetric: bool = False, tag: str = "radial"):
        self.dim = dim
        self._radial_fn = radial_fn
        self.r_in, self.r_out = r_in, r_out
        self.symmetric = symmetric
        self.tag = tag

    def _gauge(self, X):
        norms = np.linalg.norm(X, axis=1)
        out = np.zeros(len(X))
        nz = norms > 0
        if np.any(nz):
            out[nz] = norms[nz] / self._radial_fn(X[nz] / norms[nz, None])
        return out

    def _support(self, U):
        raise NotImplementedError("radial bodies expose only the gauge")
