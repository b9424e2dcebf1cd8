"""Dense simplex solver with verified optimality certificates.

Problems are stated as maximisation::

    max c.x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x_i >= 0 for i in nonneg

Free variables are split internally.  Every optimal return carries a dual
vector that is checked for feasibility and zero duality gap before the
solution leaves this module.

:class:`SupportCache` serves many objectives over one fixed feasible
region: each optimal basis found is kept, and a new objective is answered
from the cache when one of the stored bases passes the reduced-cost
optimality test for it.  Every cached answer is therefore still a
certified LP optimum; the cache only skips redundant pivoting.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .config import DEFAULT, Config


class LPError(RuntimeError):
    pass


class CyclingError(LPError):
    """Pivot budget exhausted."""


class CertificateError(LPError):
    """An optimal basis failed its primal/dual verification."""


class UnboundedError(LPError):
    pass


class InfeasibleError(LPError):
    pass


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    nonneg: np.ndarray | None = None  # boolean mask; default: all free

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.atleast_2d(np.asarray(self.A_ub, dtype=float))
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        if self.A_ub.size == 0:
            self.A_ub = self.A_ub.reshape(0, n)
        if self.A_eq.size == 0:
            self.A_eq = self.A_eq.reshape(0, n)
        self.nonneg = np.zeros(n, bool) if self.nonneg is None else np.asarray(self.nonneg, bool).ravel()
        if self.A_ub.shape != (self.b_ub.size, n) or self.A_eq.shape != (self.b_eq.size, n):
            raise ValueError("inconsistent LP dimensions")
        if self.nonneg.size != n:
            raise ValueError("nonneg mask has wrong length")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    value: float | None = None
    dual: np.ndarray | None = None  # multipliers for [A_ub; A_eq] rows
    basis: tuple | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# standard form


@dataclass
class StandardForm:
    """``max c_std.y  s.t.  A y = b, y >= 0`` with full row rank."""

    A: np.ndarray
    b: np.ndarray
    n_orig: int
    free_idx: np.ndarray  # original indices of split free variables
    n_ub: int
    rows_kept: np.ndarray  # which of the stacked [ub; eq] rows survive

    def objective(self, c: np.ndarray) -> np.ndarray:
        """Map original objective(s) (..., n_orig) to standard variables."""
        c = np.asarray(c, dtype=float)
        lead = c.shape[:-1]
        out = np.zeros(lead + (self.A.shape[1],))
        out[..., : self.n_orig] = c
        out[..., self.n_orig : self.n_orig + self.free_idx.size] = -c[..., self.free_idx]
        return out

    def recover(self, y: np.ndarray) -> np.ndarray:
        """Original variables from standard ones; works row-wise on 2-D input."""
        x = y[..., : self.n_orig].copy()
        x[..., self.free_idx] -= y[..., self.n_orig : self.n_orig + self.free_idx.size]
        return x


def to_standard(lp: LinearProgram) -> StandardForm:
    n = lp.c.size
    free = np.flatnonzero(~lp.nonneg)
    m_ub, m_eq = lp.b_ub.size, lp.b_eq.size
    cols = n + free.size + m_ub
    A = np.zeros((m_ub + m_eq, cols))
    A[:, :n] = np.vstack([lp.A_ub, lp.A_eq])
    A[:, n : n + free.size] = -A[:, free]
    A[:m_ub, n + free.size :] = np.eye(m_ub)
    b = np.concatenate([lp.b_ub, lp.b_eq])
    rows = np.arange(A.shape[0])
    if A.shape[0]:
        # drop linearly dependent rows (consistency is checked by phase 1)
        _, r, piv = linalg.qr(A.T, mode="economic", pivoting=True)
        d = np.abs(np.diag(r))
        rank = int(np.sum(d > 1e-11 * max(1.0, d.max() if d.size else 1.0)))
        keep = np.sort(piv[:rank])
        if rank < A.shape[0]:
            dropped = np.setdiff1d(rows, keep)
            sol, *_ = np.linalg.lstsq(A[keep].T, A[dropped].T, rcond=None)
            if np.max(np.abs(sol.T @ b[keep] - b[dropped])) > 1e-9 * (1 + np.abs(b).max()):
                raise InfeasibleError("inconsistent equality system")
        A, b, rows = A[keep], b[keep], keep
    return StandardForm(A, b, n, free, m_ub, rows)


# ---------------------------------------------------------------------------
# simplex core


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])


def _simplex(T, basis, n_cols, tol, max_pivots, allowed):
    """Primal simplex on tableau T (last row = -reduced costs, last column
    = rhs).  Maximises; returns 'optimal' or 'unbounded'.

    Dantzig pricing, switching to Bland's rule after a run of degenerate
    pivots so that cycling cannot occur.
    """
    m = T.shape[0] - 1
    pivots = 0
    stall = 0
    while True:
        cost = T[-1, :n_cols]
        cand = np.flatnonzero((cost < -tol) & allowed)
        if cand.size == 0:
            return "optimal"
        col = int(cand[0]) if stall > 2 * m else int(cand[np.argmin(cost[cand])])
        colv = T[:m, col]
        pos = colv > tol
        if not np.any(pos):
            return ("unbounded", col)
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + tol * max(1.0, abs(rmin)))
        row = int(ties[np.argmin([basis[i] for i in ties])])
        stall = stall + 1 if rmin <= tol else 0
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_pivots:
            raise CyclingError(f"exceeded {max_pivots} pivots")


def _reinvert(A, b, c, basis):
    """Fresh phase-2 tableau for ``basis`` (clears accumulated round-off)."""
    m, nv = A.shape
    lu = linalg.lu_factor(A[:, basis])
    T = np.empty((m + 1, nv + 1))
    T[:m, :nv] = linalg.lu_solve(lu, A)
    T[:m, -1] = np.maximum(linalg.lu_solve(lu, b), 0.0)
    T[-1, :nv] = c[basis] @ T[:m, :nv] - c
    T[-1, -1] = c[basis] @ T[:m, -1]
    return T


def _phase2(A, b, c_std, basis, config: Config):
    """Phase 2 from a primal-feasible basis, with periodic reinversion."""
    m, nv = A.shape
    tol = config.pivot_tol
    allowed = np.ones(nv, bool)
    for _ in range(4):
        T = _reinvert(A, b, c_std, basis)
        res = _simplex(T, basis, nv, tol, config.lp_max_pivots, allowed)
        if res != "optimal":
            return ("unbounded", None)
        # re-price on a fresh factorisation; stop once it agrees
        fresh = _reinvert(A, b, c_std, basis)
        if fresh[-1, :nv].min() >= -tol * (1 + np.abs(c_std).max()) and fresh[:m, -1].min() >= 0:
            break
    return ("optimal", basis)


def _solve_standard(sf: StandardForm, c_std: np.ndarray, config: Config):
    """Two-phase simplex.  Returns (status, basis list)."""
    A, b = sf.A.copy(), sf.b.copy()
    m, nv = A.shape
    tol = config.pivot_tol
    if m == 0:
        if np.any(c_std > tol):
            return ("unbounded", None)
        return ("optimal", [])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    # start from slack columns where possible, artificials elsewhere
    basis = [-1] * m
    slack0 = sf.n_orig + sf.free_idx.size
    for i in range(m):
        orig_row = sf.rows_kept[i]
        if orig_row < sf.n_ub and not neg[i]:
            col = slack0 + orig_row
            if abs(A[i, col] - 1.0) < 1e-15 and np.count_nonzero(A[:, col]) == 1:
                basis[i] = col
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    T = np.zeros((m + 1, nv + n_art + 1))
    T[:m, :nv] = A
    T[:m, -1] = b
    for j, i in enumerate(art_rows):
        T[i, nv + j] = 1.0
        basis[i] = nv + j
    max_piv = config.lp_max_pivots
    if n_art:
        # phase 1: maximise -sum(artificials)
        T[-1, nv : nv + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        allowed = np.ones(nv + n_art, bool)
        res = _simplex(T, basis, nv + n_art, tol, max_piv, allowed)
        if res != "optimal":  # pragma: no cover - phase 1 is bounded
            raise LPError("phase 1 unbounded")
        if T[-1, -1] < -1e-9 * (1 + np.abs(b).max()):
            return ("infeasible", None)
        # drive zero-level artificials out of the basis
        for i in range(m):
            if basis[i] >= nv:
                row = T[i, :nv]
                col = int(np.argmax(np.abs(row)))
                if abs(row[col]) <= 1e-9:  # pragma: no cover - rows have full rank
                    raise LPError("redundant row survived rank reduction")
                _pivot(T, i, col)
                basis[i] = col
    # phase 2
    return _phase2(A, b, c_std, basis, config)


@dataclass
class BasisCertificate:
    """Refactored optimal basis: vertex, reduced tableau and dual."""

    basis: np.ndarray
    y: np.ndarray  # primal vertex in standard variables
    T: np.ndarray  # A_B^{-1} A
    dual: np.ndarray


def certify_basis(sf: StandardForm, basis, c_std, config: Config = DEFAULT) -> BasisCertificate:
    basis = np.asarray(sorted(basis), dtype=int)
    A, b = sf.A, sf.b
    m, nv = A.shape
    if m == 0:
        return BasisCertificate(basis, np.zeros(nv), np.zeros((0, nv)), np.zeros(0))
    AB = A[:, basis]
    lu = linalg.lu_factor(AB)
    yB = linalg.lu_solve(lu, b)
    T = linalg.lu_solve(lu, A)
    dual = linalg.lu_solve(lu, c_std[basis], trans=1)
    y = np.zeros(nv)
    y[basis] = yB
    scale_b = 1.0 + np.abs(b).max()
    scale_c = 1.0 + np.abs(c_std).max()
    # primal feasibility
    if yB.min() < -config.lp_feas_tol * scale_b or np.abs(A @ y - b).max() > config.lp_feas_tol * scale_b:
        raise CertificateError("primal feasibility check failed")
    # dual feasibility: A^T dual >= c
    if (c_std - A.T @ dual).max() > config.lp_feas_tol * scale_c:
        raise CertificateError("dual feasibility check failed")
    value = c_std @ y
    gap = abs(b @ dual - value)
    if gap > config.lp_feas_tol * (1 + abs(value)) * max(1.0, scale_b):
        raise CertificateError(f"duality gap {gap:g}")
    # complementary slackness
    if np.abs(y * (A.T @ dual - c_std)).max() > config.lp_feas_tol * scale_b * scale_c:
        raise CertificateError("complementary slackness check failed")
    return BasisCertificate(basis, y, T, dual)


def lp_solve(lp: LinearProgram, config: Config = DEFAULT) -> LpSolution:
    """Solve a small dense LP (maximisation).  See module docstring."""
    try:
        sf = to_standard(lp)
    except InfeasibleError:
        return LpSolution(Status.INFEASIBLE)
    c_std = sf.objective(lp.c)
    status, basis = _solve_standard(sf, c_std, config)
    if status == "infeasible":
        return LpSolution(Status.INFEASIBLE)
    if status == "unbounded":
        return LpSolution(Status.UNBOUNDED)
    cert = certify_basis(sf, basis, c_std, config)
    x = sf.recover(cert.y)
    dual = np.zeros(lp.b_ub.size + lp.b_eq.size)
    dual[sf.rows_kept] = cert.dual
    return LpSolution(Status.OPTIMAL, x, float(lp.c @ x), dual, tuple(cert.basis))


def solve(lp: LinearProgram, config: Config = DEFAULT) -> LpSolution:
    """Like :func:`lp_solve` but raises on non-optimal status."""
    sol = lp_solve(lp, config)
    if sol.status is Status.UNBOUNDED:
        raise UnboundedError("LP is unbounded")
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleError("LP is infeasible")
    return sol


# ---------------------------------------------------------------------------
# cached support queries over a fixed region


class SupportCache:
    """Evaluate ``max c.x`` over a fixed region for many objectives ``c``.

    The region is given by the constraint part of an LP.  Objectives are
    answered in batches; a stored basis answers an objective only if it
    passes the reduced-cost optimality test, otherwise a fresh simplex
    solve runs and its verified basis joins the cache.
    """

    def __init__(self, A_ub=None, b_ub=None, A_eq=None, b_eq=None, nonneg=None, n=None, config: Config = DEFAULT):
        if n is None:
            for a in (A_ub, A_eq):
                if a is not None and np.size(a):
                    n = np.shape(a)[1]
                    break
        self.template = LinearProgram(np.zeros(n), A_ub, b_ub, A_eq, b_eq, nonneg)
        self.sf = to_standard(self.template)
        self.config = config
        self._bases: list[BasisCertificate] = []
        self._Y = np.zeros((0, self.sf.A.shape[1]))
        self.solves = 0

    @property
    def n(self) -> int:
        return self.template.c.size

    def _solve_one(self, c_std: np.ndarray) -> BasisCertificate:
        if self._bases:
            # every stored basis is primal feasible: start from the best vertex
            j = int(np.argmax(self._Y @ c_std))
            basis = list(self._bases[j].basis)
            status, basis = _phase2(self.sf.A, self.sf.b, c_std, basis, self.config)
        else:
            status, basis = _solve_standard(self.sf, c_std, self.config)
        self.solves += 1
        if status == "unbounded":
            raise UnboundedError("support LP unbounded: region is not bounded in this direction")
        if status == "infeasible":
            raise InfeasibleError("support LP infeasible: empty region")
        cert = certify_basis(self.sf, basis, c_std, self.config)
        self._bases.append(cert)
        self._Y = np.vstack([self._Y, cert.y[None, :]])
        return cert

    def _check(self, C: np.ndarray, j: int) -> np.ndarray:
        cert = self._bases[j]
        if cert.T.shape[0] == 0:
            red = C
        else:
            red = C - C[:, cert.basis] @ cert.T
        scale = 1.0 + np.abs(C).max(axis=1)
        return red.max(axis=1) <= self.config.lp_certify_tol * scale

    def maximize(self, C, return_argmax: bool = False):
        """Row-wise ``max C[i].x`` over the region.  C has shape (N, n)."""
        C = np.atleast_2d(np.asarray(C, dtype=float))
        N = C.shape[0]
        Cs = self.sf.objective(C)
        values = np.full(N, np.nan)
        which = np.full(N, -1)
        pending = np.arange(N)
        if self._Y.shape[0]:
            pending = self._answer_from_cache(Cs, values, which, pending)
        for i in pending:
            if which[i] >= 0:
                continue
            # a basis found for an earlier row of this batch may serve
            if self._Y.shape[0]:
                left = self._answer_from_cache(Cs, values, which, np.array([i]))
                if left.size == 0:
                    continue
            self._solve_one(Cs[i])
            j = len(self._bases) - 1
            values[i] = Cs[i] @ self._bases[j].y
            which[i] = j
        if return_argmax:
            return values, self.sf.recover(self._Y[which])
        return values

    def _stacks(self):
        # grown geometrically so appending a basis stays amortised O(1)
        nb = len(self._bases)
        have = getattr(self, "_stack_n", 0)
        if have != nb:
            T0 = self._bases[0].T
            cap = getattr(self, "_Tbuf", np.zeros((0,) + T0.shape)).shape[0]
            if cap < nb:
                new_cap = max(16, 2 * nb)
                Bbuf = np.zeros((new_cap, T0.shape[0]), dtype=int)
                Tbuf = np.zeros((new_cap,) + T0.shape)
                if have:
                    Bbuf[:have], Tbuf[:have] = self._Bbuf[:have], self._Tbuf[:have]
                self._Bbuf, self._Tbuf = Bbuf, Tbuf
            for j in range(have, nb):
                self._Bbuf[j] = self._bases[j].basis
                self._Tbuf[j] = self._bases[j].T
            self._stack_n = nb
        return self._Bbuf[:nb], self._Tbuf[:nb]

    def _check_rows(self, C: np.ndarray, best: np.ndarray) -> np.ndarray:
        """Reduced-cost test of row i of C against basis best[i], batched."""
        B, T = self._stacks()
        if T.shape[1] == 0:
            red_max = C.max(axis=1)
        else:
            red_max = np.empty(len(C))
            step = max(1, 2_000_000 // max(1, T.shape[1] * T.shape[2]))
            for s in range(0, len(C), step):
                Cc, bb = C[s : s + step], best[s : s + step]
                CB = np.take_along_axis(Cc, B[bb], axis=1)
                red = Cc - np.einsum("im,imn->in", CB, T[bb])
                red_max[s : s + step] = red.max(axis=1)
        scale = 1.0 + np.abs(C).max(axis=1)
        return red_max <= self.config.lp_certify_tol * scale

    def _answer_from_cache(self, Cs, values, which, rows):
        S = Cs[rows] @ self._Y.T
        best = S.argmax(axis=1)
        ok = self._check_rows(Cs[rows], best)
        values[rows[ok]] = S[ok, best[ok]]
        which[rows[ok]] = best[ok]
        unresolved = rows[~ok].tolist()
        still = []
        if unresolved:
            # degenerate ties: try every near-maximal stored basis
            for i in unresolved:
                srow = Cs[i] @ self._Y.T
                top = srow.max()
                cands = np.flatnonzero(srow >= top - 1e-9 * (1 + abs(top)))
                done = False
                for j in cands:
                    if self._check(Cs[i : i + 1], j)[0]:
                        values[i] = srow[j]
                        which[i] = j
                        done = True
                        break
                if not done:
                    still.append(i)
        return np.asarray(still, dtype=int)
