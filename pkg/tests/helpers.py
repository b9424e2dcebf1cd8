import numpy as np


def unit_rows(gen, n, count):
    X = gen.standard_normal((count, n))
    return X / np.linalg.norm(X, axis=1)[:, None]


def within_sigma(est, exact, k=3.0, floor=1e-12):
    """True when ``est`` is within k standard errors (plus a tiny floor) of ``exact``."""
    return abs(est.value - exact) <= k * est.stderr + floor * max(1.0, abs(exact))
