"""Minimal deterministic SVG line charts (no plotting dependency)."""
from __future__ import annotations

import math
from pathlib import Path

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def chart_points(series: dict, log_log: bool = False):
    """Map each series to chart coordinates; returns ({name: [(px, py)]}, bounds)."""
    if not series or any(len(pts) == 0 for pts in series.values()):
        raise ValueError("need at least one non-empty series")
    tf = math.log10 if log_log else float
    mapped = {}
    for name, pts in series.items():
        out = []
        for t, v in pts:
            if log_log and (t <= 0 or v <= 0):
                raise ValueError(f"non-positive value ({t}, {v}) in series {name!r} under log-log axes")
            if not (math.isfinite(t) and math.isfinite(v)):
                continue
            out.append((tf(t), tf(v)))
        mapped[name] = out
    xs = [p[0] for pts in mapped.values() for p in pts]
    ys = [p[1] for pts in mapped.values() for p in pts]
    if not xs:
        raise ValueError("no finite points to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B
    px = {
        name: [
            (MARGIN_L + (x - x0) / (x1 - x0) * pw, MARGIN_T + (y1 - y) / (y1 - y0) * ph)
            for x, y in pts
        ]
        for name, pts in mapped.items()
    }
    return px, (x0, x1, y0, y1)


def emit_svg_chart(series: dict, log_log: bool = False, path=None, title: str = "",
                   xlabel: str = "t", ylabel: str = "") -> str:
    """Render named (t, value) sequences as polylines with axes and a legend."""
    px, (x0, x1, y0, y1) = chart_points(series, log_log)
    pre = "log10 " if log_log else ""
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               'fill="none" stroke="black" stroke-width="1"/>')
    for k in range(5):
        fx = k / 4
        xv = x0 + fx * (x1 - x0)
        yv = y0 + fx * (y1 - y0)
        gx = _fmt(left + fx * (right - left))
        gy = _fmt(bottom - fx * (bottom - top))
        out.append(f'<text x="{gx}" y="{bottom + 16}" font-size="11" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{left - 6}" y="{gy}" font-size="11" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 12}" font-size="13" '
               f'text-anchor="middle">{pre}{xlabel}</text>')
    out.append(f'<text x="16" y="{(top + bottom) / 2:.1f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">{pre}{ylabel}</text>')
    if title:
        out.append(f'<text x="{(left + right) / 2:.1f}" y="20" font-size="14" text-anchor="middle">{title}</text>')
    for k, (name, pts) in enumerate(px.items()):
        color = COLORS[k % len(COLORS)]
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 16 + 18 * k
        out.append(f'<line x1="{right + 12}" y1="{ly}" x2="{right + 36}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{right + 42}" y="{ly + 4}" font-size="12">{name}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
