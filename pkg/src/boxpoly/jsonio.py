"""Deterministic JSON output: floats with 17 significant digits, rationals as "p/q"."""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .poly import format_rational


def _plain(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


def _encode(obj, out: list):
    obj = _plain(obj)
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if math.isfinite(obj):
            text = format(obj, ".17g")
            if not any(ch in text for ch in ".en"):
                text += ".0"
            out.append(text)
        else:
            out.append(json.dumps(str(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    out: list = []
    _encode(obj, out)
    return "".join(out)
