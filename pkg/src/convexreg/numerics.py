"""Shared numerical kernels: seeded streams, Haar subspaces, dense
factorisations, 1-D quadrature and root finding, and a vectorised
derivative-free convex minimiser."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, special

from .config import DEFAULT, Config


class NumericsError(RuntimeError):
    """A numerical kernel failed to meet its contract."""


class NotPositiveDefiniteError(NumericsError, ValueError):
    pass


class QuadratureError(NumericsError):
    pass


class RootFindError(NumericsError, ValueError):
    pass


# ---------------------------------------------------------------------------
# random streams


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.blake2b(str(label).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator keyed through a
    ``SeedSequence``, so draws depend only on the pair and never on the
    order in which streams are consumed.  ``child`` derives independent
    sub-streams from integer or string labels.
    """

    seed: int
    stream_id: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.stream_id, tuple):
            object.__setattr__(self, "stream_id", (self.stream_id,))

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(_label_key(x) for x in labels))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(_label_key(x) for x in self.stream_id))
        return np.random.Generator(np.random.Philox(ss))


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# sphere and Grassmannian


def unit_ball_volume(n: int) -> float:
    """omega_n = pi^{n/2} / Gamma(n/2 + 1)."""
    return math.exp(0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n + 1))


def log_unit_ball_volume(n: int) -> float:
    return 0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n + 1)


def sphere_sample(n: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on S^{n-1}; shape ``(n,)`` or ``(size, n)``."""
    if n < 1:
        raise ValueError("dimension must be positive")
    gen = as_stream(rng).generator()
    m = 1 if size is None else size
    g = gen.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # pragma: no cover - probability zero
        bad = norms == 0.0
        g[bad] = gen.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
    u = g / norms[:, None]
    return u[0] if size is None else u


def sphere_directions(n: int, count: int, rng) -> np.ndarray:
    """``count`` uniform directions, drawn in fixed-size batches from
    derived streams so the result does not depend on how callers chunk."""
    stream = as_stream(rng)
    out = np.empty((count, n))
    batch = DEFAULT.mc_batch
    for b, start in enumerate(range(0, count, batch)):
        stop = min(count, start + batch)
        out[start:stop] = sphere_sample(n, stream.child("dirs", b), size=stop - start)
    return out


@dataclass(frozen=True)
class Subspace:
    """A k-dimensional linear subspace of R^n given by an orthonormal basis."""

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be an n x k matrix")
        n, k = b.shape
        if not 1 <= k <= n:
            raise ValueError(f"subspace dimension {k} out of range for n={n}")
        if not np.all(np.isfinite(b)):
            raise ValueError("basis has non-finite entries")
        if np.max(np.abs(b.T @ b - np.eye(k))) > DEFAULT.orthonormal_tol * 10:
            raise ValueError("basis columns are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def complement(self) -> "Subspace":
        """Orthonormal basis of H^perp (requires k < n)."""
        if self.k == self.n:
            raise ValueError("full space has trivial complement")
        q, _ = np.linalg.qr(np.hstack([self.basis, np.eye(self.n)]), mode="complete")
        c = q[:, self.k:]
        # re-orthogonalise against the basis to kill round-off
        c = c - self.basis @ (self.basis.T @ c)
        q2, _ = np.linalg.qr(c)
        return Subspace(q2[:, : self.n - self.k])

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    @classmethod
    def from_spanning(cls, vectors) -> "Subspace":
        a = np.atleast_2d(np.asarray(vectors, dtype=float))
        q, r = qr(a)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(r).max())))
        if rank != a.shape[1]:
            raise ValueError(f"spanning set has rank {rank} < {a.shape[1]}")
        return cls(q)


def haar_subspace(n: int, k: int, rng) -> Subspace:
    """Haar-random element of G_{n,k}: Q-factor of an n x k Gaussian matrix."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    g = as_stream(rng).generator().standard_normal((n, k))
    q, r = qr(g)
    # sign fix makes the map Gaussian -> Q equivariant, hence Haar
    q = q * np.sign(np.diag(r))[None, :]
    return Subspace(q)


# ---------------------------------------------------------------------------
# dense factorisations


def qr(a) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a residual check."""
    a = np.asarray(a, dtype=float)
    q, r = np.linalg.qr(a)
    scale = max(np.linalg.norm(a), 1e-300)
    if np.linalg.norm(q @ r - a) > DEFAULT.decomposition_residual * scale:
        raise NumericsError("QR residual check failed")
    return q, r


def chol(sigma) -> np.ndarray:
    """Lower Cholesky factor L with L L^T = sigma."""
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(s, s.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(s).max())):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        low = linalg.cholesky(s, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    if np.linalg.norm(low @ low.T - s) > DEFAULT.decomposition_residual * max(np.linalg.norm(s), 1e-300):
        raise NotPositiveDefiniteError("Cholesky residual check failed")
    return low


def solve_spd(sigma, b) -> np.ndarray:
    low = chol(sigma)
    return linalg.cho_solve((low, True), np.asarray(b, dtype=float))


# ---------------------------------------------------------------------------
# quadrature and root finding


def exp_tail_cutoff(p: float, beta: float, r0: float, target: float) -> float:
    """Smallest R >= r0 with  int_R^inf p r^{p-1} e^{-beta r} dr <= target."""
    if target <= 0:
        raise ValueError("target must be positive")

    def tail(r):
        return p * math.exp(special.gammaln(p) + math.log(special.gammaincc(p, beta * r) + 1e-320)) / beta**p

    r = max(r0, 1e-12)
    while tail(r) > target:
        r *= 1.5
        if r > 1e12:
            raise QuadratureError("tail certificate never drops below target")
    return r


def quad_1d(g, a: float, b: float, tol: float | None = None, decay=None, config: Config = DEFAULT) -> float:
    """Adaptive integral of a scalar function on [a, b], b possibly +inf.

    For infinite ranges ``decay`` must be a callable ``target -> R`` that
    returns a cutoff beyond which the tail contributes at most ``target``
    (typically built from :func:`exp_tail_cutoff`), or ``None`` to
    integrate through the substitution r = t / (1 - t).
    Raises :class:`QuadratureError` when the requested relative accuracy
    is not reached.
    """
    tol = config.quad_rel_tol if tol is None else tol
    if math.isinf(b):
        if decay is not None:
            # coarse value fixes the absolute tail budget
            coarse, _ = integrate.quad(g, a, decay(1e-6), limit=config.quad_limit)
            cutoff = decay(max(abs(coarse), 1e-300) * tol * 1e-2)
            return quad_1d(g, a, cutoff, tol, None, config)

        def mapped(t):
            if t >= 1.0:
                return 0.0
            r = a + t / (1.0 - t)
            return g(r) / (1.0 - t) ** 2

        return quad_1d(mapped, 0.0, 1.0, tol, None, config)
    val, err, info = _quad_full(g, a, b, tol, config.quad_limit)
    if not np.isfinite(val) or err > tol * max(abs(val), 1e-300) * 10:
        raise QuadratureError(f"quadrature did not converge: value={val!r}, error estimate={err!r}")
    return float(val)


def _quad_full(g, a, b, tol, limit):
    # QUADPACK refuses relative tolerances below 50 machine epsilons
    out = integrate.quad(g, a, b, epsabs=0.0, epsrel=max(tol, 1.2e-14), limit=limit, full_output=1)
    return out[0], out[1], out[2]


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    if m not in _GL_CACHE:
        _GL_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GL_CACHE[m]


def panel_nodes(upper: np.ndarray, nodes: int, panels: int, grading: float = 2.0):
    """Composite Gauss-Legendre nodes/weights on [0, upper_i] for each row.

    Panels are graded toward the origin (breakpoints ``(j/panels)^grading``)
    since radial integrands concentrate there.  Returns arrays of shape
    ``(len(upper), nodes * panels)``.
    """
    x, w = gauss_legendre(nodes)
    breaks = (np.arange(panels + 1) / panels) ** grading
    lo, hi = breaks[:-1], breaks[1:]
    t = ((hi - lo)[:, None] * (x[None, :] + 1) / 2 + lo[:, None]).ravel()
    wt = ((hi - lo)[:, None] * w[None, :] / 2).ravel()
    upper = np.asarray(upper, dtype=float)
    return upper[:, None] * t[None, :], upper[:, None] * wt[None, :]


def bisect(g, target: float, lo: float, hi: float, steps: int = 60) -> float:
    """Plain bisection for an increasing g; used as an independent oracle."""
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def root_find_increasing(g, target: float, bracket, tol: float | None = None) -> float:
    """Solve g(x) = target for g increasing on ``bracket``.

    Uses Brent's method on the bracket, then verifies
    |g(x) - target| <= tol (1 + |target|).
    """
    from scipy import optimize

    tol = DEFAULT.root_tol if tol is None else tol
    lo, hi = float(bracket[0]), float(bracket[1])
    glo, ghi = g(lo) - target, g(hi) - target
    if glo > 0 or ghi < 0:
        raise RootFindError(f"target {target!r} outside [{glo + target!r}, {ghi + target!r}]")
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    x = optimize.brentq(lambda t: g(t) - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(g(x) - target) > tol * (1 + abs(target)):
        # flat g near the root: polish with bisection on the residual
        x = bisect(g, target, lo, hi, steps=200)
        if abs(g(x) - target) > tol * (1 + abs(target)):
            raise RootFindError("root residual above tolerance")
    return float(x)


# ---------------------------------------------------------------------------
# vectorised convex descent

_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_line_search(obj, x0: np.ndarray, d: np.ndarray, half_width: np.ndarray, iters: int):
    """Minimise ``obj(x0 + t d)`` over t in [-w, w], row-wise.

    ``obj`` maps an (N, m) array to (N,).  Returns (t*, value).
    """
    a = -half_width.copy()
    b = half_width.copy()
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc = obj(x0 + c[:, None] * d)
    fe = obj(x0 + e[:, None] * d)
    for _ in range(iters):
        left = fc < fe
        # shrink toward the better interior point
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - _INV_PHI * (b - a), e)
        new_e = np.where(left, c, a + _INV_PHI * (b - a))
        fnew_keep = np.where(left, fc, fe)
        probe = np.where(left, new_c, new_e)
        fprobe = obj(x0 + probe[:, None] * d)
        fc = np.where(left, fprobe, fnew_keep)
        fe = np.where(left, fnew_keep, fprobe)
        c, e = new_c, new_e
    t = np.where(fc < fe, c, e)
    return t, np.minimum(fc, fe)


def convex_descent(obj, starts, scale, rng=None, config: Config = DEFAULT, extra_dirs: int = 0,
                   indexed: bool = False):
    """Row-wise minimisation of a convex objective without gradients.

    Parameters
    ----------
    obj : callable
        Maps an (N, m) array of candidate points to (N,) objective values.
        Must be convex in each row's variables.  With ``indexed=True`` it
        is called as ``obj(W, rows)`` where ``rows`` are the indices of the
        rows in ``W``; rows that have converged then drop out of later
        sweeps instead of being re-evaluated.
    starts : sequence of (N, m) arrays
        Multi-start initial points; the best finishing value is kept.
    scale : (N,) array
        Initial line-search half width per row; doubled whenever a
        search ends at the bracket edge.
    extra_dirs : int
        Random unit directions appended to the coordinate axes in every
        sweep; helps on non-smooth objectives where pure coordinate
        moves stall at kinks.

    Returns
    -------
    (x, value) with shapes (N, m) and (N,).
    """
    gen = None if rng is None else as_stream(rng).generator()
    f = obj if indexed else (lambda W, rows: obj(W))
    best_x = None
    best_v = None
    for x in starts:
        x = np.array(x, dtype=float, copy=True)
        n_rows, m = x.shape
        width = np.broadcast_to(np.asarray(scale, dtype=float), (n_rows,)).copy()
        width = np.maximum(width, 1e-12)
        scale0 = width.copy()
        rows = np.arange(n_rows)
        v = f(x, rows)
        for _sweep in range(config.descent_max_sweeps):
            dirs = [np.eye(m)[j] for j in range(m)]
            if extra_dirs and gen is not None:
                r = gen.standard_normal((extra_dirs, m))
                dirs += list(r / np.linalg.norm(r, axis=1)[:, None])
            xs, vs, ws = x[rows], v[rows], width[rows]
            x_start, v_start = xs.copy(), vs.copy()
            sub = lambda W, rows=rows: f(W, rows)  # noqa: E731

            # the first sweep brackets from the caller's scale; later ones
            # start from a bracket a few times the last move, so fewer
            # golden steps reach the same resolution
            iters = config.golden_iters if _sweep == 0 else max(20, config.golden_iters // 2)

            def search(xs, vs, D, w):
                for _grow in range(40):
                    t, val = golden_line_search(sub, xs, D, w, iters)
                    edge = np.abs(np.abs(t) - w) < 1e-6 * w
                    improve = val < vs
                    xs = np.where(improve[:, None], xs + t[:, None] * D, xs)
                    vs = np.where(improve, val, vs)
                    if not np.any(edge & improve):
                        break
                    w = np.where(edge & improve, 2 * w, w)
                return xs, vs

            for d in dirs:
                xs, vs = search(xs, vs, d[None, :], ws.copy())
            # Powell step along each row's net move, which damps the
            # zig-zag of coordinate sweeps in narrow valleys
            disp = xs - x_start
            norm = np.linalg.norm(disp, axis=1)
            if m > 1 and np.any(norm > 0):
                D = disp / np.where(norm > 0, norm, 1.0)[:, None]
                xs, vs = search(xs, vs, D, np.maximum(2.0 * norm, 1e-12))
            x[rows], v[rows] = xs, vs
            # later sweeps search a bracket matched to the last move
            width[rows] = np.maximum(4.0 * norm, 1e-9 * scale0[rows])
            moving = v_start - vs > config.descent_obj_tol * (1 + np.abs(vs))
            if not moving.any():
                break
            if indexed:
                rows = rows[moving]
        if best_x is None:
            best_x, best_v = x, v
        else:
            better = v < best_v
            best_x = np.where(better[:, None], x, best_x)
            best_v = np.where(better, v, best_v)
    return best_x, best_v
