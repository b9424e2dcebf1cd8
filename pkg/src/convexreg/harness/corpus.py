"""Test corpora: named body and function descriptions.

The default corpus is generated per dimension from a seed, so the
calibration and evaluation corpora differ only in their random members.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..body.io import parse_body
from ..functional import parse_function

FUNCTION_TYPES = {"gaussian", "lp_exp", "indicator", "shift_center"}

BODY_FAMILIES = (
    "ball",
    "cube",
    "cross",
    "simplex",
    "random-a",
    "random-b",
    "polar-random",
    "affine-simplex",
)
FUNCTION_FAMILIES = (
    "gaussian-iso",
    "gaussian-aniso",
    "lp_exp-1",
    "lp_exp-1.5",
    "lp_exp-3",
    "shift-lp3",
    "shift-lp1.5",
    "indicator-simplex",
    "indicator-cube",
)


@dataclass(frozen=True)
class CorpusItem:
    id: str
    kind: str  # "body" or "function"
    spec: dict
    n: int
    family: str = "custom"

    def build(self):
        return parse_body(self.spec) if self.kind == "body" else parse_function(self.spec)

    def as_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)


def _int_seed(seed: int, *labels) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(x) for x in labels))
    return int(ss.generate_state(1)[0])


def _key(label) -> int:
    if isinstance(label, int):
        return label
    return sum(ord(c) * 131**i for i, c in enumerate(str(label))) & 0xFFFFFFFF


def _gen(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(_int_seed(seed, *labels))


def _body_family(family: str, n: int, seed: int) -> dict:
    if family == "ball":
        return {"type": "ball", "n": n, "radius": 1.0}
    if family == "cube":
        return {"type": "cube", "n": n, "a": 1.0}
    if family == "cross":
        return {"type": "cross_polytope", "n": n, "a": 1.0}
    if family == "simplex":
        return {"type": "simplex", "n": n}
    if family == "random-a":
        return {"type": "random_polytope", "n": n, "m": 2 * n, "seed": _int_seed(seed, "random-a", n)}
    if family == "random-b":
        return {"type": "random_polytope", "n": n, "m": 4 * n, "seed": _int_seed(seed, "random-b", n)}
    if family == "polar-random":
        inner = {"type": "random_polytope", "n": n, "m": 3 * n, "seed": _int_seed(seed, "polar-random", n)}
        return {"op": "polar", "body": inner}
    if family == "affine-simplex":
        g = _gen(seed, "affine-simplex", n)
        T = np.eye(n) + 0.3 * g.standard_normal((n, n)) / math.sqrt(n)
        # the regular simplex contains the ball of radius 1/sqrt(n(n+1))
        shift = g.standard_normal(n)
        shift *= 0.25 / (math.sqrt(n * (n + 1)) * np.linalg.norm(shift))
        lin = {"op": "linear", "matrix": np.round(T, 12).tolist(), "body": {"type": "simplex", "n": n}}
        return {"op": "translate", "shift": np.round(shift, 12).tolist(), "body": lin}
    raise KeyError(family)


def _function_family(family: str, n: int, seed: int) -> dict:
    if family == "gaussian-iso":
        return {"type": "gaussian", "n": n, "sigma": 1.0}
    if family == "gaussian-aniso":
        return {"type": "gaussian", "cov": np.diag(np.linspace(0.5, 2.0, n)).tolist()}
    if family.startswith("lp_exp-"):
        return {"type": "lp_exp", "n": n, "p": float(family.split("-", 1)[1])}
    if family.startswith("shift-lp"):
        p = float(family[len("shift-lp"):])
        g = _gen(seed, family, n)
        s = g.standard_normal(n)
        s *= 0.5 / np.linalg.norm(s)
        return {"type": "shift_center", "inner": {"type": "lp_exp", "n": n, "p": p}, "shift": np.round(s, 12).tolist()}
    if family == "indicator-simplex":
        return {"type": "indicator", "body": {"type": "simplex", "n": n}}
    if family == "indicator-cube":
        return {"type": "indicator", "body": {"type": "cube", "n": n, "a": 1.0}}
    raise KeyError(family)


def default_items(families, dims, seed: int) -> list[CorpusItem]:
    items = []
    for fam in families:
        for n in dims:
            if fam in BODY_FAMILIES:
                items.append(CorpusItem(f"{fam}{n}", "body", _body_family(fam, n, seed), n, fam))
            else:
                items.append(CorpusItem(f"{fam}{n}", "function", _function_family(fam, n, seed), n, fam))
    return items


def _spec_dim(spec: dict, kind: str) -> int:
    return (parse_body(spec) if kind == "body" else parse_function(spec)).dim


def _kind_of(spec: dict) -> str:
    return "function" if spec.get("type") in FUNCTION_TYPES else "body"


def resolve_corpus(entries, dims, seed: int, base_dir: Path | None = None) -> list[CorpusItem]:
    """Expand config corpus entries into items.

    Entries: ``"default"`` (every family), ``"default:<family>"``, a path to
    a body/function JSON file, or ``{"id": ..., "body"|"function": {...}}``.
    Default families are instantiated for every dimension in ``dims``.
    """
    items: list[CorpusItem] = []
    for entry in entries:
        if isinstance(entry, str) and entry.startswith("default"):
            fams = BODY_FAMILIES + FUNCTION_FAMILIES if entry == "default" else (entry.split(":", 1)[1],)
            items.extend(default_items(fams, dims, seed))
        elif isinstance(entry, str):
            path = Path(entry)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            spec = json.loads(path.read_text())
            kind = _kind_of(spec)
            items.append(CorpusItem(path.stem, kind, spec, _spec_dim(spec, kind)))
        else:
            kind = "body" if "body" in entry else "function"
            spec = entry[kind]
            items.append(CorpusItem(entry["id"], kind, spec, _spec_dim(spec, kind)))
    seen = set()
    out = []
    for it in items:
        if it.id not in seen:
            seen.add(it.id)
            out.append(it)
    return out
