"""Experiment configuration: schema, validation and budget overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from ..config import Config
from .corpus import BODY_FAMILIES, FUNCTION_FAMILIES

SUITES = (
    "duality",
    "bipolar",
    "classics",
    "simplex-sharp",
    "theorem-projections",
    "theorem-sections",
    "bs-weak",
    "random-subspace",
    "aleksandrov",
    "functional",
)


@dataclass(frozen=True)
class Budgets:
    directions: int = 2000  # spherical MC directions per volume
    subspaces: int = 2  # random H per (body, n, k) in the theorem suites
    haar: int = 200  # Haar subspaces per (body, k) for the random-subspace report
    hr_samples: int = 8000  # hit-and-run samples for barycentres
    iso_samples: int = 20000  # hit-and-run samples per isotropic pass
    oracle_directions: int = 1_000_000  # exact-oracle rows of the classics suite
    points: int = 500  # pointwise identity checks
    grassmann: int = 32  # subspaces per Q_k / Phi_k estimate
    fn_directions: int = 128  # directions per functional integral
    fn_points: int = 64  # pointwise checks of functional identities
    fradelizi_max_dim: int = 4  # offset-section search only up to this n
    rs_max_dim: int = 5  # Rogers-Shephard difference-body rows up to this n


BUDGET_FIELDS = tuple(f.name for f in dataclasses.fields(Budgets))

_K_SPEC = {
    "oneOf": [
        {"enum": ["all", "edges"]},
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    ]
}

_CORPUS_ENTRY = {
    "oneOf": [
        {"type": "string", "minLength": 1},
        {
            "type": "object",
            "required": ["id"],
            "properties": {"id": {"type": "string", "minLength": 1}, "body": {"type": "object"}, "function": {"type": "object"}},
            "oneOf": [{"required": ["body"]}, {"required": ["function"]}],
            "additionalProperties": False,
        },
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["suite", "corpus", "dims", "calibration_seed"],
    "additionalProperties": False,
    "properties": {
        "suite": {"enum": list(SUITES) + ["all"]},
        "corpus": {"type": "array", "items": _CORPUS_ENTRY, "minItems": 1},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 64}, "minItems": 1},
        "k": _K_SPEC,
        "p_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
        "calibration_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "budgets": {
            "type": "object",
            "properties": {name: {"type": "integer", "minimum": 1} for name in BUDGET_FIELDS},
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {f.name: {"type": "number"} for f in dataclasses.fields(Config)},
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"summary": {"type": "string", "minLength": 1}},
            "additionalProperties": False,
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    corpus: tuple
    dims: tuple
    calibration_seed: int
    k: object = "all"
    p_values: tuple = (2.0, 3.0, 5.0, 10.0)
    budgets: Budgets = field(default_factory=Budgets)
    tolerances: dict = field(default_factory=dict)
    summary_name: str = "summary.json"
    base_dir: str = "."

    def k_values(self, n: int) -> list[int]:
        if n < 2:
            return []
        if self.k == "all":
            return list(range(1, n))
        if self.k == "edges":
            return sorted({1, max(1, n // 2), n - 1})
        return [k for k in self.k if 1 <= k <= n - 1]

    def numeric_config(self) -> Config:
        """Library config: defaults, then the file's tolerances, then env."""
        cfg = Config().replace(**{k: type(getattr(Config(), k))(v) for k, v in self.tolerances.items()})
        env = Config.from_env()
        overrides = {f.name: getattr(env, f.name) for f in dataclasses.fields(Config)
                     if "CONVEXREG_" + f.name.upper() in os.environ}
        return cfg.replace(**overrides)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "corpus": list(self.corpus),
            "dims": list(self.dims),
            "k": self.k if isinstance(self.k, str) else list(self.k),
            "p_values": list(self.p_values),
            "calibration_seed": self.calibration_seed,
            "budgets": dataclasses.asdict(self.budgets),
            "tolerances": dict(self.tolerances),
        }


def budgets_from(node: dict, environ=None) -> Budgets:
    """File values first, then ``CONVEXREG_BUDGET_<NAME>`` environment overrides."""
    environ = os.environ if environ is None else environ
    values = dict(node)
    for name in BUDGET_FIELDS:
        key = "CONVEXREG_BUDGET_" + name.upper()
        if key in environ:
            try:
                values[name] = int(environ[key])
            except ValueError:
                raise ConfigError(f"{key} must be an integer") from None
            if values[name] < 1:
                raise ConfigError(f"{key} must be positive")
    return Budgets(**values)


def _check_corpus(entries, base_dir: Path) -> None:
    families = set(BODY_FAMILIES) | set(FUNCTION_FAMILIES)
    for i, entry in enumerate(entries):
        if not isinstance(entry, str):
            continue
        if entry == "default":
            continue
        if entry.startswith("default:"):
            if entry.split(":", 1)[1] not in families:
                raise ConfigError(f"/corpus/{i}: unknown default family {entry!r}")
            continue
        path = Path(entry)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"/corpus/{i}: file not found: {entry}")


def parse_config(node: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    try:
        jsonschema.validate(node, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"{where}: {exc.message}") from None
    base_dir = Path(base_dir)
    _check_corpus(node["corpus"], base_dir)
    k = node.get("k", "all")
    return ExperimentConfig(
        suite=node["suite"],
        corpus=tuple(node["corpus"]),
        dims=tuple(node["dims"]),
        calibration_seed=int(node["calibration_seed"]),
        k=k if isinstance(k, str) else tuple(k),
        p_values=tuple(float(p) for p in node.get("p_values", (2.0, 3.0, 5.0, 10.0))),
        budgets=budgets_from(node.get("budgets", {})),
        tolerances=dict(node.get("tolerances", {})),
        summary_name=node.get("output", {}).get("summary", "summary.json"),
        base_dir=str(base_dir),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        node = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(node, path.parent)
