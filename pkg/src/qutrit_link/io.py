"""Deterministic text output: 12 significant digits, LF endings, atomic writes."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    return format(float(x), ".12g")


def round12(obj):
    """Recursively round floats to 12 significant digits for JSON output.

    Non-finite floats become ``None`` so the output stays valid JSON.
    """
    if isinstance(obj, dict):
        return {str(k): round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [round12(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(fmt(x))
    return obj


def json_text(obj) -> str:
    return json.dumps(round12(obj), indent=2) + "\n"


def csv_text(columns: dict, comments=None) -> str:
    lines = []
    for line in comments or ():
        lines.append("# " + line)
    names = list(columns)
    lines.append(",".join(names))
    cols = [np.asarray(columns[n], dtype=float) for n in names]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
