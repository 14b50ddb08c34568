"""JSON and CSV formats for plants, multipliers, certificates and plots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, Iterable, Sequence

import numpy as np

from .errors import PlantError
from .lti import StateSpaceModel


def plant_from_dict(d: dict) -> StateSpaceModel:
    name = d.get("name", "")
    if "tf" in d:
        tf = d["tf"]
        return StateSpaceModel.from_tf(tf["num"], tf["den"], name=name)
    if "ss" in d:
        s = d["ss"]
        return StateSpaceModel(np.asarray(s["A"], dtype=float), np.asarray(s["B"], dtype=float),
                               np.asarray(s["C"], dtype=float), np.asarray(s["D"], dtype=float), name=name)
    raise PlantError("plant file needs a 'tf' or 'ss' entry")


def load_plant(path) -> StateSpaceModel:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise PlantError(f"cannot read plant file {path}: {exc}") from exc
    try:
        return plant_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise PlantError(f"malformed plant file {path}: {exc}") from exc


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats are written with their shortest round-trip repr."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_trajectory_csv(path, e1: np.ndarray, e2: np.ndarray) -> None:
    e1 = np.atleast_2d(e1)
    e2 = np.atleast_2d(e2)
    d = e1.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k"] + [f"e1_{i}" for i in range(d)] + [f"e2_{i}" for i in range(d)])
        for k in range(e1.shape[0]):
            wr.writerow([k] + [repr(float(v)) for v in e1[k]] + [repr(float(v)) for v in e2[k]])


PLOT_COLUMNS = ("omega", "ReG", "ImG", "ReM", "ImM", "ReGM", "ImGM")


def write_plot_csv(path, table: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(PLOT_COLUMNS)
        for row in table:
            wr.writerow([repr(float(v)) for v in row])


def write_svg(path, curves: Dict[str, np.ndarray], size: int = 480) -> None:
    """Polylines of complex curves (name -> complex array) on a shared square frame."""
    pts = np.concatenate([np.asarray(c, dtype=complex) for c in curves.values()])
    lo_x, hi_x = float(np.min(pts.real)), float(np.max(pts.real))
    lo_y, hi_y = float(np.min(pts.imag)), float(np.max(pts.imag))
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-12)
    pad = 20

    def xy(c):
        x = pad + (c.real - lo_x) / span * (size - 2 * pad)
        y = size - pad - (c.imag - lo_y) / span * (size - 2 * pad)
        return " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(x, y))

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for i, (name, c) in enumerate(curves.items()):
        c = np.asarray(c, dtype=complex)
        lines.append(f'<polyline fill="none" stroke="{colors[i % len(colors)]}" points="{xy(c)}">'
                     f"<title>{name}</title></polyline>")
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")
