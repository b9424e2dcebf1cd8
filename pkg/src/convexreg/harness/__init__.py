"""Experiment harness: configs, corpora, suites and reports."""

from .corpus import CorpusItem, default_items, resolve_corpus
from .experiment import SUITES, Budgets, ConfigError, ExperimentConfig, load_config, parse_config
from .records import COLUMNS, InequalityRecord, Row
from .runner import RunResult, run_experiment

__all__ = [
    "COLUMNS",
    "SUITES",
    "Budgets",
    "ConfigError",
    "CorpusItem",
    "ExperimentConfig",
    "InequalityRecord",
    "Row",
    "RunResult",
    "default_items",
    "load_config",
    "parse_config",
    "resolve_corpus",
    "run_experiment",
]
