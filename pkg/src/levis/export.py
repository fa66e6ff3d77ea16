"""JSON, CSV and SVG writers for search results."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .network import Box, lp_norm

SVG_SIZE = 480
_COLORS = {np.inf: "#1f77b4", 1.0: "#d62728", 2.0: "#2ca02c"}


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def write_alpha_trace(trace, path) -> None:
    """CSV columns iteration, radius, c_0 .. c_{d-1}."""
    d = trace[0].center.size if trace else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "radius"] + [f"c_{i}" for i in range(d)])
        for s in trace:
            w.writerow([s.iteration, repr(float(s.radius))] + [repr(float(v)) for v in s.center])


def write_beta_radii(union, x0, path) -> None:
    """CSV columns ball_index, radius, dist_to_x0 (distance in each ball's own norm)."""
    x0 = np.asarray(x0, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ball_index", "radius", "dist_to_x0"])
        for i, b in enumerate(union):
            w.writerow([i, repr(b.radius), repr(lp_norm(b.center - x0, b.p))])


def _shape(b, axes, fixed, to_px, scale) -> Optional[str]:
    """Primitive for the 2-D slice of ball b through the plane with the other coordinates fixed."""
    others = [k for k in range(b.center.size) if k not in axes]
    off = np.array([fixed[k] - b.center[k] for k in others])
    # radius of the slice: what remains of the budget after the fixed coordinates
    if b.p == np.inf:
        if off.size and np.abs(off).max() > b.radius:
            return None
        rr = b.radius
    elif b.p == 1:
        rr = b.radius - np.abs(off).sum()
    else:
        q = b.radius ** 2 - float(off @ off)
        rr = np.sqrt(q) if q >= 0 else -1.0
    if rr < 0:
        return None
    cx, cy = to_px(b.center[axes[0]], b.center[axes[1]])
    color = _COLORS.get(b.p, "#7f7f7f")
    style = f'class="ball" fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="1"'
    s = rr * scale
    if b.p == np.inf:
        return f'<rect x="{cx - s:.6g}" y="{cy - s:.6g}" width="{2 * s:.6g}" height="{2 * s:.6g}" {style}/>'
    if b.p == 1:
        pts = f"{cx:.6g},{cy - s:.6g} {cx + s:.6g},{cy:.6g} {cx:.6g},{cy + s:.6g} {cx - s:.6g},{cy:.6g}"
        return f'<polygon points="{pts}" {style}/>'
    return f'<circle cx="{cx:.6g}" cy="{cy:.6g}" r="{s:.6g}" {style}/>'


def union_svg(union, box: Box, axes: Sequence[int] = (0, 1), fixed=None, title: str = "") -> str:
    """SVG 1.1 drawing of the union projected on two input axes.

    For inputs beyond two dimensions the remaining coordinates are held at
    ``fixed`` (default: the first ball's center) and each ball is cut by that
    plane. The plot uses equal scales on both axes.
    """
    axes = tuple(int(a) for a in axes)
    dim = box.dim
    if len(axes) != 2 or axes[0] == axes[1] or not all(0 <= a < dim for a in axes):
        raise ValueError("axes must name two distinct input coordinates")
    if fixed is None:
        fixed = union[0].center if len(union) else (box.lower + box.upper) / 2
    fixed = np.asarray(fixed, dtype=float)
    lo = box.lower[list(axes)]
    hi = box.upper[list(axes)]
    span = float(max(hi - lo))
    scale = (SVG_SIZE - 20) / span if span > 0 else 1.0

    def to_px(x, y):
        return 10 + (x - lo[0]) * scale, SVG_SIZE - 10 - (y - lo[1]) * scale

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}">',
    ]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    x0, y0 = to_px(lo[0], hi[1])
    parts.append(f'<rect x="{x0:.6g}" y="{y0:.6g}" width="{(hi[0] - lo[0]) * scale:.6g}" '
                 f'height="{(hi[1] - lo[1]) * scale:.6g}" fill="none" stroke="black" stroke-width="1"/>')
    for b in union:
        prim = _shape(b, axes, fixed, to_px, scale)
        if prim:
            parts.append(prim)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_union_svg(union, box: Box, path, axes=(0, 1), fixed=None, title: str = "") -> None:
    Path(path).write_text(union_svg(union, box, axes, fixed, title), encoding="utf-8")
