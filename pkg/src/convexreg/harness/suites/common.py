"""Shared plumbing for suites: tasks, per-task context and normalisations."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ...body import VPolytope, translate
from ...config import Config
from ...measure import Estimate, barycenter, santalo_point
from ...numerics import RngStream, convex_descent
from ..corpus import CorpusItem, _int_seed
from ..experiment import ExperimentConfig
from ..records import Row, error_row

CALIBRATED = ("cal-le", "cal-ge")


@dataclass(frozen=True)
class Task:
    """One unit of work: a suite applied to one corpus item (or a global slot)."""

    suite: str
    phase: str  # "evaluation" or "calibration"
    seed: int
    item: CorpusItem | None
    n: int

    @property
    def item_id(self) -> str:
        return self.item.id if self.item is not None else "-"


def as_estimate(x) -> Estimate:
    return x if isinstance(x, Estimate) else Estimate.exact(float(x))


class Context:
    """Collects rows for one task.

    Every row gets its own seed derived from the task seed and the row's
    labels, so results do not depend on evaluation order.  ``memo``
    shares intermediate quantities between rows; a failure inside a memo
    is re-raised for every row that needs it, so each of those rows is
    reported as an error while unrelated rows still run.
    """

    def __init__(self, task: Task, exp: ExperimentConfig, config: Config):
        self.task = task
        self.exp = exp
        self.config = config
        self.budgets = exp.budgets
        self.rows: list[Row] = []
        self._memo: dict = {}

    @property
    def n(self) -> int:
        return self.task.n

    @property
    def calibrating(self) -> bool:
        return self.task.phase == "calibration"

    def seed_for(self, *labels) -> int:
        t = self.task
        return _int_seed(t.seed, t.suite, t.item_id, t.n, *[str(x) for x in labels])

    def stream(self, *labels) -> RngStream:
        return RngStream(self.seed_for(*labels))

    def memo(self, key, fn):
        if key not in self._memo:
            try:
                self._memo[key] = (True, fn())
            except Exception as exc:  # noqa: BLE001 - reported per row
                self._memo[key] = (False, exc)
        ok, value = self._memo[key]
        if not ok:
            raise value
        return value

    def emit(self, iid: str, k: int, body: str, compute, relation: str, *, scale: float = 1.0,
             tol: float = 0.0, labels=()) -> None:
        """Evaluate ``compute(rng) -> (lhs, rhs)`` into a row.

        During calibration only calibrated relations are evaluated.
        """
        if self.calibrating and relation not in CALIBRATED:
            return
        seed = self.seed_for(iid, k, body, *labels)
        t0 = time.perf_counter()
        try:
            lhs, rhs = compute(RngStream(seed))
            row = Row(iid, self.n, k, body, as_estimate(lhs), as_estimate(rhs), relation,
                      scale=scale, tol=tol, phase=self.task.phase, seed=seed)
        except Exception as exc:  # noqa: BLE001 - a failed row must not abort the rest
            row = error_row(iid, self.n, k, body, exc, self.task.phase, seed)
        row.ms = 1000.0 * (time.perf_counter() - t0)
        self.rows.append(row)

    def fail(self, iid: str, exc: BaseException, body: str | None = None) -> None:
        body = body or self.task.item_id
        self.rows.append(error_row(iid, self.n, 0, body, exc, self.task.phase, self.seed_for(iid)))


# ---------------------------------------------------------------------------
# normalisations


def is_simplex(K) -> bool:
    return isinstance(K, VPolytope) and len(K.vertices) == K.dim + 1


def normalized(ctx: Context, K, mode: str):
    """K moved so that bar(K) = 0 (``"bar"``) or bar(K°) = 0 (``"santalo"``).

    Symmetric bodies are returned unchanged.  Simplices use the exact
    vertex mean as barycentre.
    """

    def build():
        if K.symmetric:
            return K
        if mode == "bar":
            if is_simplex(K):
                b = K.vertices.mean(axis=0)
            else:
                b = barycenter(K, ctx.budgets.hr_samples, ctx.stream("norm", "bar"), ctx.config).value
            return translate(K, -b)
        if mode == "santalo":
            s = santalo_point(K, ctx.budgets.directions, ctx.stream("norm", "santalo"), ctx.config)
            return translate(K, -s.point)
        raise ValueError(f"unknown normalisation {mode!r}")

    return ctx.memo(("normalized", mode), build)


def modes_for(K) -> tuple[str, ...]:
    return ("sym",) if K.symmetric else ("bar", "santalo")


def body_label(item_id: str, mode: str) -> str:
    return item_id if mode == "sym" else f"{item_id}@{mode}"


def log_factor(n: int, power: float) -> float:
    return math.log(n + 1) ** power


def section_interior_points(K, X: np.ndarray, B: np.ndarray, config: Config):
    """For offsets X (rows), points y = x + B z minimising p_K over x + H.

    Returns ``(Y, g)`` with ``g = p_K(Y)``; the affine section through x
    has interior points iff ``g < 1``.
    """
    k = B.shape[1]
    Z0 = np.zeros((len(X), k))
    scale = np.full(len(X), K.r_out)
    Z, g = convex_descent(lambda Z, rows: K.gauge(X[rows] + Z @ B.T), [Z0], scale, rng=0, config=config,
                          extra_dirs=2, indexed=True)
    return X + Z @ B.T, g
