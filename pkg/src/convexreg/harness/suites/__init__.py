"""Suite registry: how each suite splits into tasks and how a task runs."""

from __future__ import annotations

from ..corpus import CorpusItem
from ..experiment import ExperimentConfig
from .common import Context, Task
from .functional import suite_functional
from .geometry import suite_bipolar, suite_classics, suite_duality
from .theorems import (
    suite_aleksandrov,
    suite_bs_weak,
    suite_random_subspace,
    suite_simplex_sharp,
    suite_theorem_projections,
    suite_theorem_sections,
)

RUNNERS = {
    "duality": suite_duality,
    "bipolar": suite_bipolar,
    "classics": suite_classics,
    "simplex-sharp": suite_simplex_sharp,
    "theorem-projections": suite_theorem_projections,
    "theorem-sections": suite_theorem_sections,
    "bs-weak": suite_bs_weak,
    "random-subspace": suite_random_subspace,
    "aleksandrov": suite_aleksandrov,
    "functional": suite_functional,
}

# suites with fitted constants run a calibration phase first
CALIBRATED_SUITES = {
    "classics",
    "simplex-sharp",
    "theorem-projections",
    "theorem-sections",
    "bs-weak",
    "random-subspace",
    "aleksandrov",
    "functional",
}

# calibrated upper bounds whose constant must not drift with n; the other
# calibrated bands are loose near k = n by design and report drift only
TREND_IDS = {
    "projections",
    "sections",
    "bs-weak",
    "thm-sections-functional",
    "thm-projections-functional",
}


def plan(suite: str, exp: ExperimentConfig, items: list[CorpusItem], phase: str, seed: int) -> list[Task]:
    """Tasks of one suite and phase, in report order."""
    if suite == "simplex-sharp":
        return [Task(suite, phase, seed, None, n) for n in exp.dims if n >= 2]
    kind = "function" if suite == "functional" else "body"
    tasks = [Task(suite, phase, seed, it, it.n) for it in items if it.kind == kind]
    if suite == "functional":
        tasks.insert(0, Task(suite, phase, seed, None, 1))
    return tasks


def run_task(task: Task, exp: ExperimentConfig, config) -> list:
    ctx = Context(task, exp, config)
    try:
        RUNNERS[task.suite](ctx)
    except Exception as exc:  # noqa: BLE001 - recorded, never fatal
        ctx.fail("suite", exc)
    return ctx.rows


__all__ = ["CALIBRATED_SUITES", "RUNNERS", "TREND_IDS", "Task", "plan", "run_task"]
