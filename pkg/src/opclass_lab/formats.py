"""JSON wire formats shared by the CLI and the witness dumps.

Matrix::

    {"rows": r, "cols": c, "re": [...], "im": [...]}    # row-major

NaN and infinities are rejected both when parsing text and when decoding
already-parsed objects.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def _reject_constant(name):
    raise ParseError(f"non-finite JSON constant {name!r}")


def loads(text: str):
    """``json.loads`` that refuses NaN/Infinity literals."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc


def load_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed separators, no NaN."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False)


def _real_list(values, what):
    if not isinstance(values, list):
        raise ParseError(f"{what} must be a list")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{what} entries must be numbers, got {v!r}")
        if not math.isfinite(v):
            raise ParseError(f"{what} has a non-finite entry")
        out.append(float(v))
    return out


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ParseError("matrix must be a JSON object")
    try:
        rows, cols = obj["rows"], obj["cols"]
        re = _real_list(obj["re"], "re")
    except KeyError as exc:
        raise ParseError(f"matrix is missing field {exc}") from None
    im = _real_list(obj.get("im", [0.0] * len(re)), "im")
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise ParseError("rows and cols must be positive integers")
    if len(re) != rows * cols or len(im) != rows * cols:
        raise ParseError(f"expected {rows * cols} entries, got re={len(re)} im={len(im)}")
    return (np.array(re) + 1j * np.array(im)).reshape(rows, cols)


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(load_file(path))


def real_list_from_json(obj, what="sequence"):
    return _real_list(obj, what)
