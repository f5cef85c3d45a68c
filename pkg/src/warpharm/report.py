"""Deterministic report serialisation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

from . import __version__


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, fixed indentation, non-finite floats as strings."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def config_hash(config) -> str:
    text = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def envelope(command: str, config, tolerances: dict, result: dict) -> dict:
    return {
        "command": command,
        "config_hash": config_hash(config),
        "tolerances": tolerances,
        "version": __version__,
        "result": result,
    }


def rows_csv(header, rows) -> str:
    """RFC-4180 text with CRLF line ends; floats written with ``repr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()
