"""JSON body descriptions.

Leaf nodes carry a ``"type"``::

    {"type": "vpolytope", "vertices": [[...], ...]}
    {"type": "ball", "n": 3, "radius": 1.0}
    {"type": "lp_ball", "n": 3, "p": 1.5, "scale": 1.0}
    {"type": "cube", "n": 3, "a": 1.0}
    {"type": "cross_polytope", "n": 3, "a": 1.0}
    {"type": "ellipsoid", "matrix": [[...], ...]}
    {"type": "simplex", "n": 4}
    {"type": "random_polytope", "n": 4, "m": 12, "seed": 7}

Operator nodes carry an ``"op"`` and a nested ``"body"``::

    {"op": "polar" | "outer" | "inner" | "difference", "body": ...}
    {"op": "linear", "matrix": [[...]], "body": ...}
    {"op": "translate", "shift": [...], "body": ...}
    {"op": "section" | "project", "subspace": SUB, "body": ...}

where ``SUB`` is ``{"basis": [[...]]}`` (n x k, orthonormal columns),
``{"haar": {"k": 2, "seed": 5}}`` or ``{"sharp": {"k": 2}}`` (the simplex
subspace H_k).  Errors name the offending node by JSON pointer.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..numerics import Subspace, haar_subspace
from . import ops
from .core import BodyError, ConvexBody, Ellipsoid, LpBall, ball, cross_polytope, cube


class BodySpecError(BodyError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


def _ptr(path: str, key) -> str:
    key = str(key).replace("~", "~0").replace("/", "~1")
    return f"{path}/{key}"


def _get(node: dict, key: str, path: str, kind=None, default=...):
    if key not in node:
        if default is ...:
            raise BodySpecError(path, f"missing field {key!r}")
        return default
    value = node[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise BodySpecError(_ptr(path, key), "expected an integer")
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise BodySpecError(_ptr(path, key), "expected a number")
        value = float(value)
        if math.isnan(value):
            raise BodySpecError(_ptr(path, key), "NaN is not allowed")
    return value


def _dim(node: dict, path: str) -> int:
    n = _get(node, "n", path, int)
    if n < 1:
        raise BodySpecError(_ptr(path, "n"), "dimension must be positive")
    return n


def _matrix(value, path: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise BodySpecError(path, "expected a numeric matrix") from None
    if a.ndim != 2 or a.size == 0:
        raise BodySpecError(path, "expected a non-empty 2-D array")
    if not np.all(np.isfinite(a)):
        raise BodySpecError(path, "entries must be finite")
    if rows is not None and a.shape[0] != rows:
        raise BodySpecError(path, f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise BodySpecError(path, f"expected {cols} columns, got {a.shape[1]}")
    return a


def _vector(value, path: str, size: int) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise BodySpecError(path, "expected a numeric vector") from None
    if a.ndim != 1 or a.size != size:
        raise BodySpecError(path, f"expected a vector of length {size}")
    if not np.all(np.isfinite(a)):
        raise BodySpecError(path, "entries must be finite")
    return a


def parse_subspace(node, n: int, path: str = "") -> Subspace:
    if not isinstance(node, dict):
        raise BodySpecError(path, "subspace must be an object")
    if "basis" in node:
        B = _matrix(node["basis"], _ptr(path, "basis"), rows=n)
        try:
            return Subspace(B)
        except ValueError as exc:
            raise BodySpecError(_ptr(path, "basis"), str(exc)) from None
    if "haar" in node:
        sub = _ptr(path, "haar")
        h = node["haar"]
        if not isinstance(h, dict):
            raise BodySpecError(sub, "expected an object")
        k = _get(h, "k", sub, int)
        seed = _get(h, "seed", sub, int)
        if not 1 <= k <= n - 1:
            raise BodySpecError(_ptr(sub, "k"), f"need 1 <= k <= {n - 1}")
        return haar_subspace(n, k, seed)
    if "sharp" in node:
        sub = _ptr(path, "sharp")
        h = node["sharp"]
        if not isinstance(h, dict):
            raise BodySpecError(sub, "expected an object")
        k = _get(h, "k", sub, int)
        if not 1 <= k <= n - 1:
            raise BodySpecError(_ptr(sub, "k"), f"need 1 <= k <= {n - 1}")
        return ops.simplex_sharp_subspace(n, k, h.get("vertices"))
    raise BodySpecError(path, "subspace needs one of 'basis', 'haar', 'sharp'")


def _leaf(node: dict, path: str) -> ConvexBody:
    kind = node["type"]
    if kind == "vpolytope":
        V = _matrix(_get(node, "vertices", path), _ptr(path, "vertices"))
        return ops.VPolytope(V)
    if kind == "ball":
        r = _get(node, "radius", path, float, 1.0)
        if r <= 0:
            raise BodySpecError(_ptr(path, "radius"), "radius must be positive")
        return ball(_dim(node, path), r)
    if kind == "lp_ball":
        p = _get(node, "p", path, float)
        if p < 1:
            raise BodySpecError(_ptr(path, "p"), "p must be >= 1")
        a = _get(node, "scale", path, float, 1.0)
        if a <= 0:
            raise BodySpecError(_ptr(path, "scale"), "scale must be positive")
        return LpBall(_dim(node, path), p, a)
    if kind in ("cube", "cross_polytope"):
        a = _get(node, "a", path, float, 1.0)
        if a <= 0:
            raise BodySpecError(_ptr(path, "a"), "half-width must be positive")
        return (cube if kind == "cube" else cross_polytope)(_dim(node, path), a)
    if kind == "ellipsoid":
        A = _matrix(_get(node, "matrix", path), _ptr(path, "matrix"))
        if A.shape[0] != A.shape[1]:
            raise BodySpecError(_ptr(path, "matrix"), "matrix must be square")
        return Ellipsoid(A)
    if kind == "simplex":
        return ops.regular_simplex(_dim(node, path))
    if kind == "random_polytope":
        n = _dim(node, path)
        m = _get(node, "m", path, int, 3 * n)
        if m < n + 1:
            raise BodySpecError(_ptr(path, "m"), f"need at least {n + 1} points")
        return ops.random_polytope(n, m, _get(node, "seed", path, int))
    raise BodySpecError(_ptr(path, "type"), f"unknown body type {kind!r}")


_UNARY = {
    "polar": ops.polar,
    "outer": ops.outer_reg,
    "inner": ops.inner_reg,
    "difference": ops.minkowski_diff_body,
}


def _op(node: dict, path: str) -> ConvexBody:
    op = node["op"]
    if "body" not in node:
        raise BodySpecError(path, "operator node needs a 'body'")
    K = parse_body(node["body"], _ptr(path, "body"))
    if op in _UNARY:
        return _UNARY[op](K)
    if op == "linear":
        T = _matrix(_get(node, "matrix", path), _ptr(path, "matrix"), rows=K.dim, cols=K.dim)
        return ops.linear_image(K, T)
    if op == "translate":
        z = _vector(_get(node, "shift", path), _ptr(path, "shift"), K.dim)
        return ops.translate(K, z)
    if op in ("section", "project"):
        H = parse_subspace(_get(node, "subspace", path), K.dim, _ptr(path, "subspace"))
        return (ops.section if op == "section" else ops.project)(K, H)
    raise BodySpecError(_ptr(path, "op"), f"unknown operator {op!r}")


def parse_body(node, path: str = "") -> ConvexBody:
    """Build a body from its JSON description (already decoded)."""
    if not isinstance(node, dict):
        raise BodySpecError(path, "body description must be an object")
    has_type, has_op = "type" in node, "op" in node
    if has_type == has_op:
        raise BodySpecError(path, "node needs exactly one of 'type' or 'op'")
    try:
        return _leaf(node, path) if has_type else _op(node, path)
    except BodySpecError:
        raise
    except (BodyError, ValueError) as exc:
        raise BodySpecError(path, str(exc)) from None


def load_body(source) -> ConvexBody:
    """Parse a body from a path, a JSON string or a decoded object."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        node = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        node = json.loads(source)
    else:
        node = source
    return parse_body(node)
