"""Deterministic SVG scatter plots of labeled clouds."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .geometry import LabeledDataset

PALETTE = ("#7b3fa0", "#e07b18", "#1f9bb4", "#3a9d3a", "#c8283c", "#6b6b6b")
WIDTH = HEIGHT = 480
PAD = 24
# 3-D points are drawn with this fixed orthographic projection.
ORTHO = np.array([[np.cos(np.pi / 6), -np.cos(np.pi / 6), 0.0],
                  [-0.5, -0.5, 1.0]])


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(d: LabeledDataset, title: str = "") -> str:
    dim = d.dim
    if dim is not None and dim > 3:
        raise DimensionMismatch(f"cannot draw dimension {dim}; project down to 2 or 3 first")
    coords = []
    for lbl, cloud in d.classes:
        P = cloud.points
        if dim == 3:
            P = P @ ORTHO.T
        elif dim == 1:
            P = np.column_stack([P[:, 0], np.zeros(len(P))])
        coords.append((lbl, P))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        lines.append(f'<text x="{PAD}" y="{PAD - 8}" font-size="12">{title}</text>')
    if coords:
        allp = np.vstack([P for _, P in coords])
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        scale = (WIDTH - 2 * PAD) / span
        mid = 0.5 * (lo + hi)
        for lbl, P in coords:
            color = PALETTE[lbl % len(PALETTE)]
            lines.append(f'<g fill="{color}" class="label-{lbl}">')
            for x, y in P:
                cx = WIDTH / 2 + (x - mid[0]) * scale
                cy = HEIGHT / 2 - (y - mid[1]) * scale
                lines.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="2"/>')
            lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def export_svg(clouds: LabeledDataset, path, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(render_svg(clouds, title))
