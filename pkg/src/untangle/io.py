"""Point-cloud CSV files (``label,x1,...,xn``) and JSON reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DocumentError
from .geometry import LabeledDataset, PointCloud


def write_points_csv(path, d: LabeledDataset) -> None:
    dim = d.dim or 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label"] + [f"x{i + 1}" for i in range(dim)])
        for lbl, cloud in d.classes:
            for row in cloud.points:
                w.writerow([lbl] + [repr(float(v)) for v in row])


def read_points_csv(path, guard: float = 0.0) -> LabeledDataset:
    """One class entry per distinct label, in order of first appearance."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "label":
        raise DocumentError(f"{path}: header must start with 'label'")
    dim = len(rows[0]) - 1
    if dim < 1:
        raise DocumentError(f"{path}: no coordinate columns")
    groups: dict[int, list] = {}
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise DocumentError(f"{path}:{k}: expected {dim + 1} fields")
        try:
            groups.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DocumentError(f"{path}:{k}: {exc}") from None
    return LabeledDataset(tuple((lbl, PointCloud(np.array(pts), guard))
                                for lbl, pts in groups.items()))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
