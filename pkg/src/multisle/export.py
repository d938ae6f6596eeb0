"""Artifact writers: CSV tables, JSON sidecars and an SVG hull plot.

Floats in CSV files are written with 17 significant digits; JSON uses
Python's shortest round-trip representation, which is also exact.
Artifacts written by experiment reports are named by a hash of their
content so reruns never clobber different results.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Any

import numpy as np

__all__ = [
    "fmt",
    "dumps",
    "write_json",
    "hull_csv",
    "hull_svg",
    "write_hull",
    "write_hashed",
]


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _jsonable(obj: Any):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON (sorted keys); complex numbers become ``[re, im]``."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def write_hashed(out_dir, stem: str, suffix: str, content: str) -> Path:
    """Write ``content`` to ``out_dir/stem-<hash>suffix`` and return the path."""
    digest = hashlib.sha256(content.encode()).hexdigest()[:16]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}-{digest}{suffix}"
    path.write_text(content)
    return path


def hull_csv(hull) -> str:
    """The boundary polyline as CSV ``x,y``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in zip(hull.x, hull.y):
        w.writerow([fmt(x), fmt(y)])
    return buf.getvalue()


def hull_svg(hull, support: tuple[float, float] | None = None,
             width: int = 800, height: int = 400) -> str:
    """SVG drawing of the hull boundary over the real axis.

    The view is ``[-4, 4] x [0, 4]`` scaled by ``sqrt(t)``, so hulls of a
    self-similar flow look identical at every time.  Footprint endpoints
    get ticks; the support of ``mu_t``, when given, is drawn as a band on
    the axis.
    """
    s = math.sqrt(hull.t)
    x0, x1, y1 = -4.0 * s, 4.0 * s, 4.0 * s
    margin = 30

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - y / y1 * (height - 2 * margin)

    pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(hull.x, hull.y))
    a, b = hull.footprint
    axis_y = py(0.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{px(x0):.3f}" y1="{axis_y:.3f}" x2="{px(x1):.3f}" y2="{axis_y:.3f}" '
        'stroke="black" stroke-width="1"/>',
    ]
    if support is not None:
        parts.append(
            f'<line x1="{px(support[0]):.3f}" y1="{axis_y:.3f}" x2="{px(support[1]):.3f}" '
            f'y2="{axis_y:.3f}" stroke="#c33" stroke-width="4" opacity="0.5"/>'
        )
    parts.append(
        f'<polyline points="{pts}" fill="#9bd" fill-opacity="0.35" stroke="#036" '
        'stroke-width="2"/>'
    )
    for x in (a, b):
        parts.append(
            f'<line x1="{px(x):.3f}" y1="{axis_y - 6:.3f}" x2="{px(x):.3f}" '
            f'y2="{axis_y + 6:.3f}" stroke="black" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{px(x):.3f}" y="{axis_y + 20:.3f}" font-size="12" '
            f'text-anchor="middle">{x:.4f}</text>'
        )
    parts.append(
        f'<text x="{margin}" y="{margin - 10}" font-size="14">K_t, t = {hull.t:g}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_hull(hull, out_dir, stem: str = "hull", config: dict | None = None,
               support: tuple[float, float] | None = None) -> dict[str, Path]:
    """Write ``stem.csv``, ``stem.svg`` and the ``stem.json`` sidecar.

    The sidecar carries ``t``, the footprint, flags and the effective
    ``config``.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": out_dir / f"{stem}.csv",
        "svg": out_dir / f"{stem}.svg",
        "json": out_dir / f"{stem}.json",
    }
    paths["csv"].write_text(hull_csv(hull))
    paths["svg"].write_text(hull_svg(hull, support=support))
    side = {
        "t": hull.t,
        "footprint": list(hull.footprint),
        "flags": list(hull.flags),
        "config": config or {},
    }
    if support is not None:
        side["support"] = list(support)
    write_json(paths["json"], side)
    return paths
