"""CSV and JSON writers for solver output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def write_csv(path, columns: dict) -> Path:
    """Write equally long 1-D arrays as named CSV columns."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    rows = {len(d) for d in data}
    if len(rows) > 1:
        raise ValueError(f"column lengths differ: {sorted(rows)}")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, report: dict) -> Path:
    """Write a report dict; numpy scalars become plain numbers and NaN becomes null."""
    path = Path(path)
    path.write_text(json.dumps(_plain(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def solution_columns(sol) -> dict:
    """Grid, values and node derivatives of a 1-D solution."""
    return {"t": sol.t, "y": sol.y, "y_prime": sol.slopes()}


def film_columns(mesh) -> dict:
    pos = mesh.positions()
    on_wall = np.zeros(len(pos))
    on_wall[mesh.boundary] = 1.0
    return {"t1": pos[:, 0], "t2": pos[:, 1], "y": pos[:, 2], "boundary": on_wall}
