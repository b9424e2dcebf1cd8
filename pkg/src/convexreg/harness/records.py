"""Inequality records, status rules, calibration and report files.

Suites emit :class:`Row` objects carrying estimates and a relation.  The
finaliser turns them into :class:`InequalityRecord` lines:

``le`` / ``ge``
    lhs <= rhs (or >=), failing only beyond the 3-sigma + relative-eps slack.
``agree``
    |lhs - rhs| within the same slack.
``exact``
    |lhs - rhs| <= ``tol * max(1, |rhs|)``; no statistical slack.
``cal-le`` / ``cal-ge``
    calibrated constants.  The normalised ratio ``c = (lhs/rhs)/scale`` is
    fitted on calibration rows (max for ``cal-le``, min for ``cal-ge``) and
    evaluation rows must stay within the headroom factor of the fit.
``info``
    reported, never asserted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

from ..config import Config
from ..measure import Estimate

COLUMNS = (
    "suite", "inequality_id", "n", "k", "body", "seed",
    "lhs", "lhs_se", "rhs", "rhs_se", "ratio", "const_calibrated", "status", "ms",
)
RELATIONS = ("le", "ge", "agree", "exact", "cal-le", "cal-ge", "info")


@dataclass
class Row:
    inequality_id: str
    n: int
    k: int
    body: str
    lhs: Estimate
    rhs: Estimate
    relation: str
    scale: float = 1.0
    tol: float = 0.0
    phase: str = "evaluation"
    seed: int = 0
    error: str | None = None
    ms: float = 0.0

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class InequalityRecord:
    suite: str
    inequality_id: str
    n: int
    k: int
    body: str
    seed: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    ratio: float
    const_calibrated: float
    status: str
    ms: float = 0.0

    def cells(self) -> list[str]:
        return [
            self.suite, self.inequality_id, str(self.n), str(self.k), self.body, str(self.seed),
            fmt(self.lhs), fmt(self.lhs_se), fmt(self.rhs), fmt(self.rhs_se), fmt(self.ratio),
            fmt(self.const_calibrated), self.status, fmt(self.ms, 1),
        ]


def fmt(x: float, digits: int = 12) -> str:
    """Deterministic float text: fixed significant digits, 'nan'/'inf' spelled out."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if digits == 1:
        return f"{x:.1f}"
    return format(x, f".{digits}g")


def error_row(inequality_id: str, n: int, k: int, body: str, exc: BaseException, phase: str, seed: int) -> Row:
    nan = Estimate(float("nan"), float("nan"), 0)
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return Row(inequality_id, n, k, body, nan, nan, "info", phase=phase, seed=seed, error=msg[:200])


# ---------------------------------------------------------------------------
# statuses


def _slack(lhs: Estimate, rhs: Estimate, config: Config) -> float:
    sigma = math.hypot(lhs.stderr, rhs.stderr)
    return config.sigma_slack * sigma + config.rel_eps * max(abs(lhs.value), abs(rhs.value))


def _ratio(lhs: Estimate, rhs: Estimate) -> tuple[float, float]:
    if rhs.value == 0 or not math.isfinite(rhs.value) or not math.isfinite(lhs.value):
        return float("nan"), float("nan")
    r = lhs.value / rhs.value
    rel = math.hypot(lhs.stderr / lhs.value if lhs.value else 0.0, rhs.stderr / rhs.value)
    return r, abs(r) * rel


def _plain_status(row: Row, config: Config) -> str:
    lhs, rhs = row.lhs, row.rhs
    if not (math.isfinite(lhs.value) and math.isfinite(rhs.value)):
        return "fail"
    if row.relation == "le":
        ok = lhs.value <= rhs.value + _slack(lhs, rhs, config)
    elif row.relation == "ge":
        ok = lhs.value >= rhs.value - _slack(lhs, rhs, config)
    elif row.relation == "agree":
        ok = abs(lhs.value - rhs.value) <= _slack(lhs, rhs, config)
    elif row.relation == "exact":
        ok = abs(lhs.value - rhs.value) <= row.tol * max(1.0, abs(rhs.value))
    else:
        return "info"
    return "pass" if ok else "fail"


@dataclass
class Calibration:
    inequality_id: str
    relation: str
    constant: float
    n_rows: int
    by_n: dict = field(default_factory=dict)  # evaluation constants per n
    drift: float = float("nan")


def _normalised(row: Row) -> tuple[float, float]:
    r, se = _ratio(row.lhs, row.rhs)
    return r / row.scale, se / row.scale


def calibrate(rows: list[Row]) -> dict[str, Calibration]:
    """Fit one constant per calibrated inequality from its calibration rows."""
    groups = defaultdict(list)
    for row in rows:
        if row.relation in ("cal-le", "cal-ge") and row.phase == "calibration" and row.error is None:
            c, _ = _normalised(row)
            if math.isfinite(c):
                groups[(row.inequality_id, row.relation)].append(c)
    out = {}
    for (iid, rel), cs in groups.items():
        const = max(cs) if rel == "cal-le" else min(cs)
        out[iid] = Calibration(iid, rel, const, len(cs))
    return out


def _calibrated_status(row: Row, cal: Calibration | None, config: Config) -> str:
    if row.phase == "calibration":
        return "calib"
    if cal is None:
        return "fail"
    c, se = _normalised(row)
    if not math.isfinite(c):
        return "fail"
    slack = config.sigma_slack * se + config.rel_eps * abs(c)
    if row.relation == "cal-le":
        ok = c - slack <= config.headroom * cal.constant
    else:
        ok = cal.constant > 0 and c + slack >= cal.constant / config.headroom
    return "pass" if ok else "fail"


def drift_rows(rows: list[Row], cals: dict[str, Calibration], config: Config, asserted=None) -> list[Row]:
    """Growth of the per-n fitted constant across dimensions.

    For each ``cal-le`` inequality, C_n is the largest normalised ratio
    observed at dimension n on the evaluation corpus.  The drift at n is
    C_n over the running maximum of C_{n'} for n' < n, minus one; the row
    asserts it never exceeds the headroom (25% by default), i.e. the
    constant needed does not grow with the dimension.  Only ids in
    ``asserted`` (all of them when None) are checked; the others are
    reported with relation ``info``.  Asserted ids also get a ``cap:`` row
    bounding the fitted constant by ``config.calibration_cap``.
    """
    out = []
    per = defaultdict(lambda: defaultdict(list))
    for row in rows:
        if row.relation == "cal-le" and row.phase == "evaluation" and row.error is None:
            c, _ = _normalised(row)
            if math.isfinite(c):
                per[row.inequality_id][row.n].append(c)
    for iid, by_n in sorted(per.items()):
        dims = sorted(by_n)
        consts = {n: max(by_n[n]) for n in dims}
        worst = 0.0 if len(dims) > 1 else float("nan")
        running = consts[dims[0]]
        for n in dims[1:]:
            worst = max(worst, consts[n] / running - 1.0) if running > 0 else float("inf")
            running = max(running, consts[n])
        if iid in cals:
            cals[iid].by_n = consts
            cals[iid].drift = worst
        if len(dims) > 1:
            lhs = Estimate.exact(1.0 + worst)
            rhs = Estimate.exact(config.headroom)
            relation = "le" if asserted is None or iid in asserted else "info"
            out.append(Row(f"drift:{iid}", dims[-1], 0, "all", lhs, rhs, relation, tol=0.0))
    for iid, cal in sorted(cals.items()):
        if cal.relation == "cal-le" and asserted is not None and iid in asserted:
            top = max(per[iid], default=0)
            lhs, rhs = Estimate.exact(cal.constant), Estimate.exact(config.calibration_cap)
            out.append(Row(f"cap:{iid}", top, 0, "all", lhs, rhs, "le", tol=0.0))
    return out


def finalise(suite: str, rows: list[Row], config: Config, timings: bool = False, trend_ids=None):
    """Statuses and calibrated constants; returns (records, calibrations)."""
    cals = calibrate(rows)
    rows = list(rows) + drift_rows(rows, cals, config, trend_ids)
    records = []
    for row in rows:
        r, _ = _ratio(row.lhs, row.rhs)
        const = float("nan")
        if row.error is not None:
            status = f"error: {row.error}"
        elif row.relation in ("cal-le", "cal-ge"):
            cal = cals.get(row.inequality_id)
            const = cal.constant if cal else float("nan")
            status = _calibrated_status(row, cal, config)
        else:
            status = _plain_status(row, config)
        records.append(
            InequalityRecord(
                suite, row.inequality_id, row.n, row.k, row.body, row.seed,
                row.lhs.value, row.lhs.stderr, row.rhs.value, row.rhs.stderr, r, const, status,
                row.ms if timings else 0.0,
            )
        )
    return records, cals


def failed(record: InequalityRecord) -> bool:
    return record.status == "fail" or record.status.startswith("error")


# ---------------------------------------------------------------------------
# files


def csv_text(records: list[InequalityRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in records:
        w.writerow(rec.cells())
    return buf.getvalue()


def summary_dict(suite: str, records: list[InequalityRecord], cals: dict[str, Calibration]) -> dict:
    counts = defaultdict(int)
    worst = {}
    for rec in records:
        key = "error" if rec.status.startswith("error") else rec.status
        counts[key] += 1
        if math.isfinite(rec.ratio) and rec.status in ("pass", "fail"):
            cur = worst.get(rec.inequality_id)
            if cur is None or rec.ratio > cur["ratio"]:
                worst[rec.inequality_id] = {"ratio": _jnum(rec.ratio), "n": rec.n, "k": rec.k, "body": rec.body}
    return {
        "suite": suite,
        "counts": dict(sorted(counts.items())),
        "passed": not any(failed(r) for r in records),
        "calibrated_constants": {
            iid: {
                "relation": c.relation,
                "constant": _jnum(c.constant),
                "calibration_rows": c.n_rows,
                "per_dimension": {str(n): _jnum(v) for n, v in sorted(c.by_n.items())},
                "drift": _jnum(c.drift),
            }
            for iid, c in sorted(cals.items())
        },
        "worst_ratios": dict(sorted(worst.items())),
        "rows": [dict(zip(COLUMNS, rec.cells())) for rec in records],
    }


def _jnum(x):
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


def summary_json(summaries: list[dict], config_echo: dict, seed: int) -> str:
    doc = {
        "seed": seed,
        "config": config_echo,
        "passed": all(s["passed"] for s in summaries),
        "suites": summaries,
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
