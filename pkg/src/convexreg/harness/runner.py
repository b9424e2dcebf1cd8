"""Run suites and write report files."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .corpus import resolve_corpus
from .experiment import SUITES, ConfigError, ExperimentConfig
from .records import InequalityRecord, csv_text, failed, finalise, summary_dict, summary_json
from .suites import CALIBRATED_SUITES, TREND_IDS, plan, run_task

log = logging.getLogger(__name__)


@dataclass
class SuiteReport:
    suite: str
    records: list[InequalityRecord]
    summary: dict

    @property
    def passed(self) -> bool:
        return not any(failed(r) for r in self.records)


@dataclass
class RunResult:
    reports: list[SuiteReport]
    files: list[Path]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def selected_suites(exp: ExperimentConfig, override: str | None = None) -> list[str]:
    name = override or exp.suite
    if name == "all":
        return list(SUITES)
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}")
    return [name]


def check_corpus(exp: ExperimentConfig, seed: int):
    """Resolve the corpus, turning unreadable or invalid entries into ConfigError."""
    try:
        items = resolve_corpus(exp.corpus, exp.dims, seed, Path(exp.base_dir))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"/corpus: {exc}") from None
    if not items:
        raise ConfigError("/corpus: the corpus is empty")
    return items


def _execute(tasks, exp, config, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [run_task(t, exp, config) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so completion order never leaks
        return list(pool.map(run_task, tasks, [exp] * len(tasks), [config] * len(tasks)))


def run_experiment(exp: ExperimentConfig, seed: int, out_dir, suite: str | None = None, jobs: int = 1,
                   timings: bool = False) -> RunResult:
    """Run the configured suites; write ``<suite>.csv`` files and the JSON summary.

    Validation problems raise :class:`ConfigError` before any file is written.
    """
    if not 0 <= int(seed) < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    suites = selected_suites(exp, suite)
    items = check_corpus(exp, int(seed))
    calib_items = check_corpus(exp, exp.calibration_seed)
    config = exp.numeric_config()

    tasks = []
    for name in suites:
        if name in CALIBRATED_SUITES:
            tasks += plan(name, exp, calib_items, "calibration", exp.calibration_seed)
        tasks += plan(name, exp, items, "evaluation", int(seed))
    log.info("running %d tasks on %d worker(s)", len(tasks), jobs)
    results = _execute(tasks, exp, config, jobs)

    reports = []
    for name in suites:
        rows = [row for t, rs in zip(tasks, results) if t.suite == name for row in rs]
        records, cals = finalise(name, rows, config, timings, TREND_IDS)
        reports.append(SuiteReport(name, records, summary_dict(name, records, cals)))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for rep in reports:
        path = out / f"{rep.suite}.csv"
        path.write_text(csv_text(rep.records))
        files.append(path)
    path = out / exp.summary_name
    path.write_text(summary_json([r.summary for r in reports], exp.to_json(), int(seed)))
    files.append(path)
    return RunResult(reports, files)
