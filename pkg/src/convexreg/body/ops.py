"""Body constructors.

These pick the most exact representation available: vertex-backed
inputs stay vertex-backed where the operation allows it, everything else
becomes a derived body that keeps an LP route through its lift.
"""

from __future__ import annotations

import math

import numpy as np

from ..numerics import Subspace, as_stream
from . import lift as lifts
from .core import (
    BodyError,
    ConvexBody,
    DegenerateBodyError,
    DifferenceBody,
    Ellipsoid,
    InnerBody,
    LinearImageBody,
    OuterBody,
    PolarBody,
    ProjectionBody,
    SectionBody,
    TranslateBody,
    VPolytope,
    probe_inradius,
)


class LiftBody(ConvexBody):
    """A body known only through a lifted polyhedron.

    Both oracles run through LPs: the support on the lift itself, the
    gauge on its dual (polar) lift.
    """

    def __init__(self, L: lifts.Lift, tag: str = "lift", r_out: float | None = None):
        self._lift = L
        self.dim = L.dim
        self.tag = tag
        if r_out is None:
            E = np.vstack([np.eye(self.dim), -np.eye(self.dim)])
            r_out = float(np.sqrt(np.sum(np.maximum(L.support(E[: self.dim]), L.support(E[self.dim :])) ** 2)))
        self.r_out = r_out
        self.r_in = probe_inradius(self)
        self.check_radii()

    def lift(self):
        return self._lift


def polar(K: ConvexBody) -> ConvexBody:
    if isinstance(K, Ellipsoid):
        return Ellipsoid(np.linalg.inv(K.A).T, tag=f"polar({K.tag})")
    return PolarBody(K)


def outer_reg(K: ConvexBody) -> ConvexBody:
    """K_out = conv(K, -K)."""
    if K.symmetric:
        return K
    if isinstance(K, VPolytope):
        V = np.vstack([K.vertices, -K.vertices])
        return VPolytope(V, tag=f"outer({K.tag})")
    return OuterBody(K)


def inner_reg(K: ConvexBody) -> ConvexBody:
    """K_in = K n (-K)."""
    if K.symmetric:
        return K
    return InnerBody(K)


def section(K: ConvexBody, H: Subspace) -> ConvexBody:
    return SectionBody(K, H)


def project(K: ConvexBody, H: Subspace) -> ConvexBody:
    return ProjectionBody(K, H)


def linear_image(K: ConvexBody, T) -> ConvexBody:
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if isinstance(K, VPolytope):
        if T.shape != (K.dim, K.dim):
            raise BodyError("linear map has wrong shape")
        s = np.linalg.svd(T, compute_uv=False)
        if s.min() <= 1e-12 * s.max():
            raise BodyError("linear map is singular")
        return VPolytope(K.vertices @ T.T, tag=f"linear({K.tag})")
    if isinstance(K, Ellipsoid):
        return Ellipsoid(T @ K.A, tag=f"linear({K.tag})")
    return LinearImageBody(K, T)


def translate(K: ConvexBody, z) -> ConvexBody:
    """K + z.  The result must keep the origin inside."""
    z = np.asarray(z, dtype=float).ravel()
    if isinstance(K, VPolytope):
        if z.size != K.dim:
            raise BodyError("shift has wrong dimension")
        return VPolytope(K.vertices + z, tag=f"translate({K.tag})")
    return TranslateBody(K, z)


def minkowski_diff_body(K: ConvexBody) -> ConvexBody:
    """K - K."""
    return DifferenceBody(K)


# ---------------------------------------------------------------------------
# concrete families


def regular_simplex(n: int) -> VPolytope:
    """Regular simplex in R^n with edge sqrt(2) and barycentre 0.

    Built from the standard basis of R^{n+1} (pairwise distance sqrt 2),
    centred and written in an orthonormal basis of the hyperplane
    sum(x) = 0.
    """
    if n < 1:
        raise BodyError("dimension must be positive")
    E = np.eye(n + 1) - 1.0 / (n + 1)
    # orthonormal basis of {sum x = 0}: Q-factor of the centred basis
    q, _ = np.linalg.qr(E[:, :n])
    V = E @ q
    return VPolytope(V, tag=f"simplex({n})")


def simplex_sharp_subspace(n: int, k: int, vertex_choice=None) -> Subspace:
    """H_k: the affine hull of k vertices of the regular simplex and the
    average of the remaining n + 1 - k; it passes through the origin."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    V = regular_simplex(n).vertices
    chosen = list(range(k)) if vertex_choice is None else [int(i) for i in vertex_choice]
    if len(chosen) != k or len(set(chosen)) != k or not all(0 <= i <= n for i in chosen):
        raise ValueError("vertex_choice must list k distinct vertex indices")
    rest = [i for i in range(n + 1) if i not in chosen]
    w = V[rest].mean(axis=0)
    pts = np.vstack([V[chosen], w])
    # the affine hull contains 0, so it equals the linear span of its points
    weights = np.concatenate([np.ones(k), [n + 1 - k]]) / (n + 1)
    if np.linalg.norm(weights @ pts) > 1e-12:
        raise AssertionError("origin is not in the affine hull")
    H = Subspace.from_spanning(pts[:k].T)
    if np.linalg.norm(w - H.basis @ (H.basis.T @ w)) > 1e-10:
        raise AssertionError("average of remaining vertices left the span")
    return H


def random_polytope(n: int, m: int, rng, centre: bool = True, tries: int = 20) -> VPolytope:
    """conv of m standard Gaussian points, recentred at their mean."""
    stream = as_stream(rng)
    for t in range(tries):
        V = stream.child("polytope", t).generator().standard_normal((m, n))
        if centre:
            V = V - V.mean(axis=0)
        try:
            return VPolytope(V, tag=f"random({n},{m})")
        except DegenerateBodyError:
            continue
    raise DegenerateBodyError("could not draw a polytope containing the origin")


def unit_simplex_volume(n: int) -> float:
    """Volume of the regular simplex with edge sqrt(2)."""
    return math.sqrt(n + 1) / math.factorial(n)
