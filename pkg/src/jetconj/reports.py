"""Deterministic JSON, CSV and SVG emitters."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else "-inf" if obj < 0 else "nan"
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def csv_text(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _clean(r.get(k, "")) for k in header})
    return buf.getvalue()


def _color(t: float) -> str:
    """Dark blue (t=0) to yellow (t=1)."""
    t = min(max(t, 0.0), 1.0)
    r, g, b = int(30 + 225 * t), int(40 + 200 * t), int(120 - 100 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(values, n_rows: int, n_cols: int, title: str = "", cell: int = 10,
                missing=None) -> str:
    """One rectangle per cell, row-major ``values``; cells equal to
    ``missing`` are drawn red."""
    finite = [v for v in values if v != missing]
    lo, hi = (min(finite), max(finite)) if finite else (0, 1)
    span = (hi - lo) or 1
    w, h = n_cols * cell, n_rows * cell + 20
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<text x="2" y="14" font-size="12" font-family="monospace">{title}</text>']
    for k, v in enumerate(values):
        r, c = divmod(k, n_cols)
        fill = "#d62728" if v == missing else _color((v - lo) / span)
        out.append(f'<rect x="{c * cell}" y="{20 + (n_rows - 1 - r) * cell}" width="{cell}" height="{cell}" fill="{fill}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_svg(series: dict, title: str = "", width: int = 480, height: int = 240) -> str:
    """Polylines for ``{label: [(x, y), ...]}``."""
    pts = [p for s in series.values() for p in s if math.isfinite(p[1])]
    if not pts:
        pts = [(0, 0), (1, 1)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    sx = (width - 40) / ((x1 - x0) or 1)
    sy = (height - 40) / ((y1 - y0) or 1)
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           f'<text x="4" y="14" font-size="12" font-family="monospace">{title}</text>']
    for k, (label, s) in enumerate(series.items()):
        coords = " ".join(f"{20 + (x - x0) * sx:.2f},{height - 20 - (y - y0) * sy:.2f}"
                          for x, y in s if math.isfinite(y))
        col = palette[k % len(palette)]
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{width - 150}" y="{30 + 14 * k}" font-size="11" fill="{col}" font-family="monospace">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(text: str, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return p
