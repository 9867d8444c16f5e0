"""Deterministic SVG line plots of results files.

The output is a pure function of the input rows: no timestamps, fixed float
formatting, series in first-appearance order.  An input without plottable
rows still gives a valid SVG with empty axes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .output import read_rows

WIDTH, HEIGHT = 640, 400
MARGIN = 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
KINDS = ("sweep", "sweep-log")


def _num(s):
    try:
        v = float(s)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def series(rows, quantities=None, log=False) -> dict[str, list[tuple[float, float]]]:
    """Per-quantity ``(sigma, value)`` points, sorted by sigma; means over replicas."""
    acc: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        q = r["quantity"]
        if quantities is not None and q not in quantities:
            continue
        s, v = _num(r["sigma"]), _num(r["value"])
        if s is None or v is None or (log and v <= 0):
            continue
        acc.setdefault(q, {}).setdefault(s, []).append(math.log10(v) if log else v)
    return {q: sorted((s, sum(v) / len(v)) for s, v in pts.items()) for q, pts in acc.items()}


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(data: dict[str, list[tuple[float, float]]], title: str = "",
               ylabel: str = "value") -> str:
    xs = [p[0] for pts in data.values() for p in pts]
    ys = [p[1] for pts in data.values() for p in pts]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
           f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">sigma</text>',
           f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {HEIGHT // 2})">{escape(ylabel)}</text>']
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_f(px(xv))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
                   f'font-size="10">{xv:.4g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{_f(py(yv) + 3)}" text-anchor="end" '
                   f'font-size="10">{yv:.4g}</text>')
    for j, (q, pts) in enumerate(data.items()):
        color = PALETTE[j % len(PALETTE)]
        path = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * j}" font-size="10" '
                   f'fill="{color}">{escape(q)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_file(path, out_path, kind: str = "sweep", quantities=None) -> None:
    """Plot every (or the selected) quantity of a results file against sigma."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    log = kind == "sweep-log"
    rows = read_rows(path)
    title = rows[0]["experiment"] if rows else ""
    svg = render_svg(series(rows, quantities, log), title, "log10 value" if log else "value")
    with open(out_path, "w") as fh:
        fh.write(svg)
