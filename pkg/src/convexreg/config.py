"""Central tolerance and budget record.

Every numeric knob used by the library lives here so that acceptance runs
can be tuned from one place.  Values can be overridden per run with
:func:`Config.replace` or through ``CONVEXREG_*`` environment variables
(see :func:`Config.from_env`).
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

from scipy import optimize, special


def _kappa_ball_body(p: float) -> float:
    # upper constant rho_{K_p}(xi) / t_p from the convex-minorant bound
    return math.exp((special.gammaln(p + 1) + (p - 1) - p * math.log(p - 1)) / p)


def _sandwich_constant(p: float) -> float:
    # c in  int t^{p-1} e^{-g} <= c M_p t_p / sqrt(p-1)
    return math.exp((p - 1) + special.gammaln(p) - (p - 0.5) * math.log(p - 1))


def _sup_over_p(fn, lo: float = 2.0, hi: float = 400.0) -> float:
    grid = [lo + (hi - lo) * (i / 4000.0) ** 2 for i in range(4001)]
    best = max(grid, key=fn)
    res = optimize.minimize_scalar(
        lambda p: -fn(p), bounds=(max(lo, best - 1.0), min(hi, best + 1.0)), method="bounded"
    )
    return max(fn(best), -res.fun)


@dataclass(frozen=True)
class Config:
    # linear algebra
    decomposition_residual: float = 1e-10
    orthonormal_tol: float = 1e-12
    # lp kernel
    pivot_tol: float = 1e-10
    lp_feas_tol: float = 1e-9
    lp_certify_tol: float = 1e-10
    lp_max_pivots: int = 20000
    # quadrature / root finding
    quad_rel_tol: float = 1e-10
    quad_limit: int = 400
    root_tol: float = 1e-10
    radial_rel_tol: float = 1e-7
    batch_quad_nodes: int = 24
    batch_quad_panels: int = 6
    # convex descent
    descent_obj_tol: float = 1e-12
    descent_max_sweeps: int = 200
    golden_iters: int = 60
    fn_golden_iters: int = 40  # inner minimisations of infimal functions
    fn_descent_tol: float = 1e-10
    fn_descent_max_sweeps: int = 20
    # bodies
    min_inradius_ratio: float = 1e-8
    oracle_rel_tol: float = 1e-9
    # Monte Carlo
    mc_batch: int = 4096
    mc_directions: int = 4000
    sigma_slack: float = 3.0
    rel_eps: float = 1e-3
    headroom: float = 1.25
    calibration_cap: float = 1.0  # ceiling on fitted trend constants
    # hit-and-run
    hr_chains: int = 32
    hr_burn_in_factor: int = 10
    hr_thin_factor: int = 1
    hr_bisect_iters: int = 40
    # Santalo fixed point
    santalo_step: float = 0.5
    santalo_max_iter: int = 60
    santalo_tol: float = 1e-6
    # isotropic normalisation
    iso_samples: int = 20000
    iso_tol: float = 0.15

    def replace(self, **kwargs) -> "Config":
        return dataclasses.replace(self, **kwargs)

    @classmethod
    def from_env(cls, environ=None) -> "Config":
        """Build a config, applying ``CONVEXREG_<FIELD>`` overrides."""
        environ = os.environ if environ is None else environ
        kwargs = {}
        for f in dataclasses.fields(cls):
            key = "CONVEXREG_" + f.name.upper()
            if key in environ:
                kwargs[f.name] = type(f.default)(environ[key])
        return cls(**kwargs)


DEFAULT = Config()

# Constants derived once by numeric maximisation over p >= 2.
KAPPA_BALL_BODY = _sup_over_p(_kappa_ball_body)
SANDWICH_CONSTANT = _sup_over_p(_sandwich_constant)
