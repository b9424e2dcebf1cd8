"""Monte Carlo functionals of convex bodies.

Volumes come from the polar-coordinate identity
``vol(K) = omega_d * E[rho_K(xi)^d]`` over uniform directions, so every
estimator reuses the gauge oracle and works unchanged for sections and
projections.  Barycentres and covariances come from hit-and-run chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .body import ConvexBody, linear_image, project, section, translate
from .config import DEFAULT, Config
from .numerics import (
    NotPositiveDefiniteError,
    NumericsError,
    RngStream,
    as_stream,
    chol,
    haar_subspace,
    log_unit_ball_volume,
    sphere_directions,
    sphere_sample,
    unit_ball_volume,
)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo scalar with its provenance."""

    value: float
    stderr: float
    n_samples: int
    seed: int | None = None
    method: str = ""

    def __float__(self) -> float:
        return float(self.value)

    @classmethod
    def exact(cls, value: float, method: str = "exact") -> "Estimate":
        return cls(float(value), 0.0, 0, None, method)

    def scale(self, c: float) -> "Estimate":
        return Estimate(c * self.value, abs(c) * self.stderr, self.n_samples, self.seed, self.method)

    def power(self, a: float) -> "Estimate":
        v = self.value**a
        return Estimate(v, abs(a * v / self.value) * self.stderr if self.value else math.inf, self.n_samples, self.seed, self.method)

    def __mul__(self, other: "Estimate") -> "Estimate":
        other = _as_estimate(other)
        v = self.value * other.value
        se = math.hypot(self.stderr * other.value, other.stderr * self.value)
        return Estimate(v, se, self.n_samples + other.n_samples, self.seed, _join(self, other, "*"))

    def __truediv__(self, other: "Estimate") -> "Estimate":
        other = _as_estimate(other)
        v = self.value / other.value
        se = abs(v) * math.hypot(_rel(self), _rel(other))
        return Estimate(v, se, self.n_samples + other.n_samples, self.seed, _join(self, other, "/"))

    def rel_stderr(self) -> float:
        return _rel(self)


def _rel(e: Estimate) -> float:
    return e.stderr / abs(e.value) if e.value else (0.0 if e.stderr == 0 else math.inf)


def _join(a: Estimate, b: Estimate, op: str) -> str:
    return f"({a.method}{op}{b.method})"


def _as_estimate(x) -> Estimate:
    return x if isinstance(x, Estimate) else Estimate.exact(float(x))


def _seed(rng) -> int | None:
    return rng.seed if isinstance(rng, RngStream) else None


# ---------------------------------------------------------------------------
# comparison rule


def combined_sigma(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def holds_le(lhs, rhs, config: Config = DEFAULT) -> bool:
    """``lhs <= rhs`` unless violated beyond k sigma *and* a relative epsilon."""
    lhs, rhs = _as_estimate(lhs), _as_estimate(rhs)
    excess = lhs.value - rhs.value
    if excess <= config.sigma_slack * combined_sigma(lhs, rhs):
        return True
    return excess <= config.rel_eps * max(abs(lhs.value), abs(rhs.value))


def holds_ge(lhs, rhs, config: Config = DEFAULT) -> bool:
    return holds_le(rhs, lhs, config)


def agrees(a, b, config: Config = DEFAULT) -> bool:
    return holds_le(a, b, config) and holds_le(b, a, config)


# ---------------------------------------------------------------------------
# spherical averages


def _budget(budget, config: Config) -> int:
    n = config.mc_directions if budget is None else int(budget)
    if n < 2:
        raise ValueError("Monte Carlo budget must be at least 2")
    return n


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return m, se


def _directions(d: int, budget: int, rng, tag: str) -> np.ndarray:
    return sphere_directions(d, budget, as_stream(rng).child(tag))


def _chunked(fn, X: np.ndarray, config: Config) -> np.ndarray:
    out = np.empty(len(X))
    step = config.mc_batch
    for s in range(0, len(X), step):
        out[s : s + step] = fn(X[s : s + step])
    return out


def radial_powers(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> np.ndarray:
    """rho_K(xi)^d for ``budget`` uniform directions xi."""
    n = _budget(budget, config)
    d = K.dim
    if d == 1:
        X = np.array([[1.0], [-1.0]])
        return 1.0 / K.gauge(X)
    X = _directions(d, n, rng, "radial")
    g = _chunked(K.gauge, X, config)
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise NumericsError(f"{K.tag}: gauge returned a non-positive or non-finite value")
    return g ** (-float(d))


def volume(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """vol_d(K) = omega_d E[rho^d]."""
    d = K.dim
    r = radial_powers(K, budget, rng, config)
    if d == 1:
        # a segment: exact length
        return Estimate(float(r.sum()), 0.0, 2, _seed(rng), "segment")
    m, se = _mean_se(r)
    w = unit_ball_volume(d)
    return Estimate(w * m, w * se, r.size, _seed(rng), "polar-mc")


def vrad(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """(vol/omega_d)^{1/d}, stderr by the delta method."""
    d = K.dim
    r = radial_powers(K, budget, rng, config)
    if d == 1:
        return Estimate(float(r.mean()), 0.0, 2, _seed(rng), "segment")
    m, se = _mean_se(r)
    v = m ** (1.0 / d)
    return Estimate(v, v * se / (d * m), r.size, _seed(rng), "polar-mc")


def vrad_section(K: ConvexBody, H, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    return vrad(section(K, H), budget, rng, config)


def vrad_projection(K: ConvexBody, H, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    return vrad(project(K, H), budget, rng, config)


def vrad_section_at(K: ConvexBody, x, H, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """vrad of the affine section K n (x + H), for x interior to K.

    Radii are chord lengths from x, located on K's own gauge, so every
    offset shares K's oracle (and its LP cache).  With the same ``rng``
    the directions are common across offsets.
    """
    x = np.asarray(x, dtype=float).ravel()
    if K.gauge(x) >= 1.0:
        raise ValueError("offset must lie in the interior of the body")
    k = H.k
    if k == 1:
        U = np.array([[1.0], [-1.0]])
    else:
        U = _directions(k, _budget(budget, config), rng, "radial")
    D = U @ H.basis.T
    hi = (K.r_out + np.linalg.norm(x)) * (1 + 1e-9)
    rho = np.empty(len(D))
    step = config.mc_batch
    for s in range(0, len(D), step):
        Ds = D[s : s + step]
        rho[s : s + step] = _chord_ends(K, np.tile(x, (len(Ds), 1)), Ds, hi, config.hr_bisect_iters)
    r = rho**k
    if k == 1:
        return Estimate(float(r.mean()), 0.0, 2, _seed(rng), "segment")
    m, se = _mean_se(r)
    v = m ** (1.0 / k)
    return Estimate(v, v * se / (k * m), r.size, _seed(rng), "chord-mc")


def M_star(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """Mean width half: average of h_K over the sphere."""
    X = _directions(K.dim, _budget(budget, config), rng, "mstar")
    m, se = _mean_se(_chunked(K.support, X, config))
    return Estimate(m, se, len(X), _seed(rng), "sphere-mc")


def M_gauge(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """Average of p_K over the sphere."""
    X = _directions(K.dim, _budget(budget, config), rng, "mgauge")
    m, se = _mean_se(_chunked(K.gauge, X, config))
    return Estimate(m, se, len(X), _seed(rng), "sphere-mc")


# ---------------------------------------------------------------------------
# hit-and-run


def _chord_ends(K: ConvexBody, X: np.ndarray, D: np.ndarray, hi: float, iters: int) -> np.ndarray:
    """Largest t in [0, hi] with p_K(x + t d) <= 1, row-wise."""
    if K.gauge_subgradient(X[:1]) is not None:
        t = _chord_ends_newton(K, X, D, hi, iters)
        if t is not None:
            return t
    return _chord_ends_falsi(K, X, D, hi, iters)


def _chord_ends_newton(K, X, D, hi, iters):
    """Newton steps from outside using gauge subgradients.

    With Y a subgradient at x + t d, the line <Y, x + s d> = 1 is crossed
    at some s in [root, t]; for a polyhedral gauge the iteration lands on
    the root after finitely many steps.  Returns None if it stalls.
    """
    t = np.full(len(X), hi)
    active = np.ones(len(X), dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return t
        g, Y = K.gauge_subgradient(X[idx] + t[idx, None] * D[idx])
        done = g <= 1.0 + 1e-12
        active[idx[done]] = False
        step = idx[~done]
        Ys = Y[~done]
        slope = np.einsum("ij,ij->i", Ys, D[step])
        if np.any(slope <= 0):
            return None
        t[step] = np.clip((1.0 - np.einsum("ij,ij->i", Ys, X[step])) / slope, 0.0, t[step])
    return None if active.any() else t


def _chord_ends_falsi(K: ConvexBody, X: np.ndarray, D: np.ndarray, hi: float, iters: int) -> np.ndarray:
    """Largest t in [0, hi] with p_K(x + t d) <= 1, row-wise.

    Regula falsi with the Illinois correction; the bracket [a, b] with
    g(a) <= 0 < g(b) is kept at every step, so the returned ``a`` is
    always a feasible point.
    """
    n = len(X)
    a = np.zeros(n)
    b = np.full(n, hi)
    fa = K.gauge(X) - 1.0
    fb = K.gauge(X + hi * D) - 1.0
    side = np.zeros(n, dtype=int)
    tol = 1e-12 * hi
    active = np.ones(n, dtype=bool)
    for _ in range(iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        denom = fb[idx] - fa[idx]
        c = b[idx] - fb[idx] * (b[idx] - a[idx]) / np.where(denom > 0, denom, 1.0)
        c = np.clip(c, a[idx], b[idx])
        fc = K.gauge(X[idx] + c[:, None] * D[idx]) - 1.0
        right = fc > 0
        # right: new upper end
        ir, il = idx[right], idx[~right]
        b[ir], fb[ir] = c[right], fc[right]
        fa[ir] = np.where(side[ir] == 1, fa[ir] / 2, fa[ir])
        side[ir] = 1
        a[il], fa[il] = c[~right], fc[~right]
        fb[il] = np.where(side[il] == -1, fb[il] / 2, fb[il])
        side[il] = -1
        active[idx] = (b[idx] - a[idx] > tol) & (np.abs(fc) > 1e-13)
    return a


def _hr_chains(K, per_chain, burn_in, thinning, rng, config, start=None):
    """Run ``config.hr_chains`` chains; returns (chains, per_chain, d)."""
    d = K.dim
    c = config.hr_chains
    stream = as_stream(rng).child("hit-and-run")
    gen = stream.generator()
    x = np.zeros((c, d)) if start is None else np.tile(np.asarray(start, float), (c, 1))
    hi = 2.0 * K.r_out * (1 + 1e-9)
    total = burn_in + per_chain * thinning
    out = np.empty((c, per_chain, d))
    for step in range(total):
        D = gen.standard_normal((c, d))
        D /= np.linalg.norm(D, axis=1)[:, None]
        ends = _chord_ends(K, np.vstack([x, x]), np.vstack([D, -D]), hi, config.hr_bisect_iters)
        tp, tm = ends[:c], ends[c:]
        u = gen.random(c)
        x = x + ((tp + tm) * u - tm)[:, None] * D
        k = step - burn_in
        if k >= 0 and (k + 1) % thinning == 0:
            out[:, k // thinning] = x
    return out


def _hr_defaults(K, burn_in, thinning, config):
    d = K.dim
    burn_in = config.hr_burn_in_factor * d * d if burn_in is None else int(burn_in)
    thinning = config.hr_thin_factor * d if thinning is None else int(thinning)
    return burn_in, max(1, thinning)


def hit_and_run_sample(K: ConvexBody, n_samples: int, burn_in=None, thinning=None, rng=0, config: Config = DEFAULT):
    """Approximately uniform points of K, shape (n_samples, d).

    Parallel chains start at the origin (an interior point by the body
    contract); chord ends come from a bracketing root search on the gauge.
    """
    burn_in, thinning = _hr_defaults(K, burn_in, thinning, config)
    per = -(-int(n_samples) // config.hr_chains)
    pts = _hr_chains(K, per, burn_in, thinning, rng, config)
    return pts.transpose(1, 0, 2).reshape(-1, K.dim)[:n_samples]


def _chain_means(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean over chains of per-chain averages, and its standard error."""
    cm = samples.mean(axis=1)
    c = cm.shape[0]
    return cm.mean(axis=0), cm.std(axis=0, ddof=1) / math.sqrt(c)


@dataclass(frozen=True)
class VectorEstimate:
    value: np.ndarray
    stderr: np.ndarray
    n_samples: int
    seed: int | None = None
    method: str = "hit-and-run"


def barycenter(K: ConvexBody, n_samples=None, rng=0, config: Config = DEFAULT, burn_in=None, thinning=None) -> VectorEstimate:
    n_samples = config.iso_samples if n_samples is None else n_samples
    burn_in, thinning = _hr_defaults(K, burn_in, thinning, config)
    per = -(-int(n_samples) // config.hr_chains)
    S = _hr_chains(K, per, burn_in, thinning, rng, config)
    m, se = _chain_means(S)
    return VectorEstimate(m, se, S.shape[0] * S.shape[1], _seed(rng))


def covariance(K: ConvexBody, n_samples=None, rng=0, config: Config = DEFAULT, burn_in=None, thinning=None) -> VectorEstimate:
    """Cov of the uniform measure on K; per-entry stderr from chain batches."""
    n_samples = config.iso_samples if n_samples is None else n_samples
    burn_in, thinning = _hr_defaults(K, burn_in, thinning, config)
    per = -(-int(n_samples) // config.hr_chains)
    S = _hr_chains(K, per, burn_in, thinning, rng, config)
    mu = S.reshape(-1, K.dim).mean(axis=0)
    Z = S - mu
    per_chain = np.einsum("cti,ctj->cij", Z, Z) / S.shape[1]
    cov = per_chain.mean(axis=0)
    se = per_chain.std(axis=0, ddof=1) / math.sqrt(S.shape[0])
    return VectorEstimate(cov, se, S.shape[0] * S.shape[1], _seed(rng))


def polar_barycenter(K: ConvexBody, z=None, budget=None, rng=0, config: Config = DEFAULT) -> VectorEstimate:
    """bar((K - z)°) from the radial formula

        bar(L) = d/(d+1) E[xi rho_L^{d+1}] / E[rho_L^d],  rho_L = 1/h_{K-z}.
    """
    d = K.dim
    z = np.zeros(d) if z is None else np.asarray(z, float)
    X = _directions(d, _budget(budget, config), rng, "polar-bar")
    h = _chunked(K.support, X, config) - X @ z
    return _radial_bar(X, 1.0 / h, d, _seed(rng))


def _radial_bar(X, rho, d, seed):
    w = rho**d
    num = X * (rho * w)[:, None]
    mw = w.mean()
    val = d / (d + 1) * num.mean(axis=0) / mw
    # delta method for the ratio of means, per coordinate
    n = len(X)
    cov_nw = np.array([np.cov(num[:, i], w)[0, 1] for i in range(d)])
    var = (num.var(axis=0, ddof=1) - 2 * (val * (d + 1) / d) * cov_nw + (val * (d + 1) / d) ** 2 * w.var(ddof=1)) / (n * mw**2)
    se = d / (d + 1) * np.sqrt(np.maximum(var, 0.0))
    return VectorEstimate(val, se, n, seed, "polar-radial")


# ---------------------------------------------------------------------------
# Santalo point


@dataclass(frozen=True)
class SantaloResult:
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool


def santalo_point(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT) -> SantaloResult:
    """Point z minimising vol((K - z)°), i.e. with bar((K - z)°) = 0.

    The directions are drawn once, which turns the Monte Carlo objective
    F(z) = mean (h_K(xi) - <z, xi>)^{-d} into a smooth convex function of
    z; damped Newton steps on F drive its gradient, which is proportional
    to the polar barycentre, to zero.
    """
    d = K.dim
    X = _directions(d, _budget(budget, config), rng, "santalo")
    h0 = _chunked(K.support, X, config)
    z = np.zeros(d)
    res = math.inf
    for it in range(1, config.santalo_max_iter + 1):
        h = h0 - X @ z
        if np.any(h <= 0):
            raise NumericsError("Santalo iteration left the body")
        rho = 1.0 / h
        bar = _radial_bar(X, rho, d, _seed(rng)).value
        res = float(np.linalg.norm(bar))
        if res <= config.santalo_tol:
            return SantaloResult(z, res, it, True)
        w = rho ** (d + 2)
        grad = (X * (w * h)[:, None]).mean(axis=0)
        hess = (d + 1) * (X.T * w) @ X / len(X)
        step = np.linalg.solve(hess, grad)
        # damping: keep the new point well inside K
        alpha = 1.0
        while np.any(h0 - X @ (z - alpha * step) <= 0.05 * h):
            alpha *= config.santalo_step
        z = z - alpha * step
    return SantaloResult(z, res, config.santalo_max_iter, False)


# ---------------------------------------------------------------------------
# isotropic normalisation


@dataclass(frozen=True)
class IsotropicReport:
    transform: np.ndarray
    shift: np.ndarray
    barycenter_residual: float
    covariance_residual: float
    volume: Estimate
    L_K: Estimate
    converged: bool
    passes: list = field(default_factory=list)


def isotropic_normalize(K: ConvexBody, budget=None, rng=0, config: Config = DEFAULT, passes: int = 2):
    """Affine image of K with volume 1, barycentre 0 and covariance L_K^2 I.

    Each pass: translate by -bar (skipped for symmetric bodies, whose
    barycentre is 0), whiten by the inverse Cholesky factor of Cov, then
    rescale to unit volume.  Returns ``(body, report)`` with
    ``body = T (K - shift)``.
    """
    stream = as_stream(rng)
    n_samples = config.iso_samples if budget is None else int(budget)
    d = K.dim
    T_total = np.eye(d)
    shift_total = np.zeros(d)
    body = K
    log = []
    for p in range(passes):
        s = stream.child("iso", p)
        if not body.symmetric:
            b = barycenter(body, n_samples, s.child("bar"), config).value
            body = translate(body, -b)
            # T (K - shift) - b = T (K - shift - T^{-1} b)
            shift_total = shift_total + np.linalg.solve(T_total, b)
        cov = covariance(body, n_samples, s.child("cov"), config).value
        try:
            low = chol(0.5 * (cov + cov.T))
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(f"covariance estimate is not SPD: {exc}") from None
        W = np.linalg.inv(low)
        body = linear_image(body, W)
        T_total = W @ T_total
        vol = volume(body, config.mc_directions * 4, s.child("vol"), config).value
        c = vol ** (-1.0 / d)
        body = linear_image(body, c * np.eye(d))
        T_total = c * T_total
        log.append({"pass": p, "whitening": W * c})
    # diagnostics on the final body with fresh streams
    check = stream.child("iso", "check")
    bar = barycenter(body, n_samples, check.child("bar"), config)
    cov = covariance(body, n_samples, check.child("cov"), config)
    vol = volume(body, config.mc_directions * 4, check.child("vol"), config)
    xi = sphere_sample(d, check.child("xi"), size=64)
    quad = np.einsum("ij,jk,ik->i", xi, cov.value, xi)
    l2 = float(quad.mean())
    A = xi.T @ xi / len(xi)
    l2_se = float(np.sqrt(np.sum(A**2 * cov.stderr**2)))
    LK = Estimate(math.sqrt(l2), 0.5 * l2_se / math.sqrt(l2), cov.n_samples, stream.seed, "isotropic-L")
    scalar = np.trace(cov.value) / d
    cres = float(np.linalg.norm(cov.value / scalar - np.eye(d), 2))
    bres = float(np.linalg.norm(bar.value)) / math.sqrt(scalar)
    ok = cres <= config.iso_tol and bres <= config.iso_tol and abs(vol.value - 1) <= config.iso_tol
    rep = IsotropicReport(T_total, shift_total, bres, cres, vol, LK, ok, log)
    return body, rep


# ---------------------------------------------------------------------------
# Grassmannian averages


def _projection_log_volumes(K, k, n_subspaces, budget, rng, config):
    stream = as_stream(rng)
    logs = np.empty(n_subspaces)
    ses = np.empty(n_subspaces)
    for i in range(n_subspaces):
        H = haar_subspace(K.dim, k, stream.child("H", i))
        v = volume(project(K, H), budget, stream.child("vol", i), config)
        logs[i] = math.log(v.value)
        ses[i] = v.stderr / v.value
    return logs, ses


def aleksandrov_Q(K: ConvexBody, k: int, n_subspaces: int = 64, budget=None, rng=0, config: Config = DEFAULT) -> Estimate:
    """Q_k(K) = (E_H vol_k(P_H K) / omega_k)^{1/k} over Haar H."""
    if not K.symmetric:
        raise ValueError("aleksandrov_Q expects a symmetric body")
    if not 1 <= k <= K.dim - 1:
        raise ValueError("need 1 <= k <= n-1")
    logs, _ = _projection_log_volumes(K, k, n_subspaces, budget, rng, config)
    v = np.exp(logs) / unit_ball_volume(k)
    m, se = _mean_se(v)
    q = m ** (1.0 / k)
    return Estimate(q, q * se / (k * m), n_subspaces, _seed(rng), "grassmann-mc")


@dataclass(frozen=True)
class PhiEstimate:
    estimate: Estimate
    max_log_summand: float
    min_log_summand: float


def paouris_pivovarov_Phi(K: ConvexBody, k: int, n_subspaces: int = 64, budget=None, rng=0, config: Config = DEFAULT) -> PhiEstimate:
    """Phi_k(K) = vol(K)^{-1/n} (E_H vol_k(P_H K)^{-n})^{-1/(kn)}, in log space."""
    if not K.symmetric:
        raise ValueError("paouris_pivovarov_Phi expects a symmetric body")
    n = K.dim
    stream = as_stream(rng)
    logs, _ = _projection_log_volumes(K, k, n_subspaces, budget, stream.child("proj"), config)
    vol = volume(K, budget, stream.child("voln"), config)
    a = -n * logs
    top = a.max()
    w = np.exp(a - top)
    mw, sew = _mean_se(w)
    log_mean = top + math.log(mw)
    log_phi = -math.log(vol.value) / n - log_mean / (k * n)
    phi = math.exp(log_phi)
    rel = math.hypot(vol.stderr / vol.value / n, (sew / mw) / (k * n))
    est = Estimate(phi, phi * rel, n_subspaces, _seed(rng), "grassmann-mc-log")
    return PhiEstimate(est, float(a.max()), float(a.min()))


def phi_ball(n: int, k: int) -> float:
    """Phi_k(B_2^n) = omega_n^{-1/n} omega_k^{1/k}, every projection being a k-ball."""
    return math.exp(log_unit_ball_volume(k) / k - log_unit_ball_volume(n) / n)


def central_binomial(n: int, k: int) -> float:
    return math.exp(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1))
