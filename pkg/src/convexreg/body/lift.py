"""Polyhedral bodies as linear images of lifted polyhedra.

A :class:`Lift` describes ``{M xi + o : A_ub xi <= b_ub, A_eq xi = b_eq,
xi_i >= 0 (i in nonneg)}``.  The family is closed under every body
constructor used here, including the polar (through LP duality), so any
composition of polytopes keeps an exact LP route to its support function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lp import SupportCache


@dataclass(frozen=True, eq=False)
class Lift:
    M: np.ndarray
    o: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    nonneg: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @property
    def nvars(self) -> int:
        return self.M.shape[1]

    @staticmethod
    def make(M, o=None, A_ub=None, b_ub=None, A_eq=None, b_eq=None, nonneg=None) -> "Lift":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        d, N = M.shape
        o = np.zeros(d) if o is None else np.asarray(o, dtype=float).ravel()
        A_ub = np.zeros((0, N)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, N)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
        A_eq = np.zeros((0, N)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, N)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        nonneg = np.zeros(N, bool) if nonneg is None else np.asarray(nonneg, bool).ravel()
        return Lift(M, o, A_ub, b_ub, A_eq, b_eq, nonneg)

    def solver(self) -> SupportCache:
        if "solver" not in self._cache:
            self._cache["solver"] = SupportCache(self.A_ub, self.b_ub, self.A_eq, self.b_eq, self.nonneg, n=self.nvars)
        return self._cache["solver"]

    def support(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        return self.solver().maximize(U @ self.M) + U @ self.o

    def support_points(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Support values and maximising points (rows of U as objectives)."""
        U = np.atleast_2d(U)
        vals, xi = self.solver().maximize(U @ self.M, return_argmax=True)
        return vals + U @ self.o, xi @ self.M.T + self.o

    def is_hpoly(self) -> bool:
        d = self.dim
        return (
            self.nvars == d
            and not self.nonneg.any()
            and self.A_eq.shape[0] == 0
            and np.array_equal(self.M, np.eye(d))
            and not self.o.any()
        )


def vpoly(V) -> Lift:
    """conv(V); assumes 0 lies in the hull so the simplex weights may sum to <= 1."""
    V = np.asarray(V, dtype=float)
    m = V.shape[0]
    return Lift.make(V.T, A_ub=np.ones((1, m)), b_ub=[1.0], nonneg=np.ones(m, bool))


def hpoly(A, b) -> Lift:
    A = np.asarray(A, dtype=float)
    return Lift.make(np.eye(A.shape[1]), A_ub=A, b_ub=b)


def linear(L: Lift, T) -> Lift:
    T = np.asarray(T, dtype=float)
    return Lift.make(T @ L.M, T @ L.o, L.A_ub, L.b_ub, L.A_eq, L.b_eq, L.nonneg)


def translate(L: Lift, z) -> Lift:
    return Lift.make(L.M, L.o + np.asarray(z, dtype=float), L.A_ub, L.b_ub, L.A_eq, L.b_eq, L.nonneg)


def project(L: Lift, B) -> Lift:
    B = np.asarray(B, dtype=float)
    return Lift.make(B.T @ L.M, B.T @ L.o, L.A_ub, L.b_ub, L.A_eq, L.b_eq, L.nonneg)


def _pad(a: np.ndarray, extra: int) -> np.ndarray:
    return np.hstack([a, np.zeros((a.shape[0], extra))])


def section(L: Lift, B) -> Lift:
    """{z in R^k : Bz in body}; variables become (xi, z)."""
    B = np.asarray(B, dtype=float)
    k = B.shape[1]
    N = L.nvars
    A_eq = np.vstack([_pad(L.A_eq, k), np.hstack([L.M, -B])])
    b_eq = np.concatenate([L.b_eq, -L.o])
    M = np.hstack([np.zeros((k, N)), np.eye(k)])
    return Lift.make(M, None, _pad(L.A_ub, k), L.b_ub, A_eq, b_eq, np.concatenate([L.nonneg, np.zeros(k, bool)]))


def _block(a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
    out = np.zeros((a1.shape[0] + a2.shape[0], a1.shape[1] + a2.shape[1]))
    out[: a1.shape[0], : a1.shape[1]] = a1
    out[a1.shape[0] :, a1.shape[1] :] = a2
    return out


def intersection(L1: Lift, L2: Lift) -> Lift:
    if L1.is_hpoly() and L2.is_hpoly():
        return hpoly(np.vstack([L1.A_ub, L2.A_ub]), np.concatenate([L1.b_ub, L2.b_ub]))
    A_ub = _block(L1.A_ub, L2.A_ub)
    b_ub = np.concatenate([L1.b_ub, L2.b_ub])
    A_eq = np.vstack([_block(L1.A_eq, L2.A_eq), np.hstack([L1.M, -L2.M])])
    b_eq = np.concatenate([L1.b_eq, L2.b_eq, L2.o - L1.o])
    M = np.hstack([L1.M, np.zeros_like(L2.M)])
    return Lift.make(M, L1.o, A_ub, b_ub, A_eq, b_eq, np.concatenate([L1.nonneg, L2.nonneg]))


def minkowski_sum(L1: Lift, L2: Lift) -> Lift:
    A_ub = _block(L1.A_ub, L2.A_ub)
    A_eq = _block(L1.A_eq, L2.A_eq)
    return Lift.make(
        np.hstack([L1.M, L2.M]),
        L1.o + L2.o,
        A_ub,
        np.concatenate([L1.b_ub, L2.b_ub]),
        A_eq,
        np.concatenate([L1.b_eq, L2.b_eq]),
        np.concatenate([L1.nonneg, L2.nonneg]),
    )


def _homogenise(L: Lift):
    """Constraints of the cone {(xi, s) : xi in s * region, s >= 0}."""
    A_ub = np.hstack([L.A_ub, -L.b_ub[:, None]])
    A_eq = np.hstack([L.A_eq, -L.b_eq[:, None]])
    M = np.hstack([L.M, L.o[:, None]])
    nonneg = np.concatenate([L.nonneg, [True]])
    return M, A_ub, A_eq, nonneg


def conv_union(L1: Lift, L2: Lift) -> Lift:
    """conv(K1 u K2) for bodies both containing the origin."""
    M1, U1, E1, n1 = _homogenise(L1)
    M2, U2, E2, n2 = _homogenise(L2)
    A_ub = _block(U1, U2)
    s_row = np.zeros((1, A_ub.shape[1]))
    s_row[0, M1.shape[1] - 1] = 1.0
    s_row[0, -1] = 1.0
    A_ub = np.vstack([A_ub, s_row])
    b_ub = np.concatenate([np.zeros(U1.shape[0] + U2.shape[0]), [1.0]])
    A_eq = _block(E1, E2)
    return Lift.make(np.hstack([M1, M2]), None, A_ub, b_ub, A_eq, np.zeros(A_eq.shape[0]), np.concatenate([n1, n2]))


def negate(L: Lift) -> Lift:
    return linear(L, -np.eye(L.dim))


def polar(L: Lift) -> Lift:
    """Polar body via LP duality.

    h(u) = <u, o> + max{(M^T u).xi : region}; by strong duality
    h(u) <= 1 iff some dual-feasible (y >= 0, w, s >= 0) satisfies
    A_ub^T y + A_eq^T w - E s = M^T u and b_ub.y + b_eq.w + <o, u> <= 1,
    where E selects the sign-constrained primal variables.
    Variables of the result: (u, y, w, s).
    """
    d, N = L.M.shape
    r, e = L.A_ub.shape[0], L.A_eq.shape[0]
    sel = np.flatnonzero(L.nonneg)
    E = np.zeros((N, sel.size))
    E[sel, np.arange(sel.size)] = 1.0
    A_eq = np.hstack([-L.M.T, L.A_ub.T, L.A_eq.T, -E])
    A_ub = np.concatenate([L.o, L.b_ub, L.b_eq, np.zeros(sel.size)])[None, :]
    total = d + r + e + sel.size
    M = np.hstack([np.eye(d), np.zeros((d, total - d))])
    nonneg = np.concatenate([np.zeros(d, bool), np.ones(r, bool), np.zeros(e, bool), np.ones(sel.size, bool)])
    return Lift.make(M, None, A_ub, [1.0], A_eq, np.zeros(N), nonneg)
