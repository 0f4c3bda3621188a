"""Hand-written SVG line plot of reconstruction-error curves (log y axis)."""

import math
import os
from collections import defaultdict
from xml.sax.saxutils import escape

from ..errors import ParseError
from .csvio import read_curves

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 20, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
# floor for exact zeros so they stay on a log axis
FLOOR = 1e-32


def curve_series(records):
    """Per method, the seed-averaged MSE at each (t, sigma), ordered by t."""
    acc = defaultdict(lambda: defaultdict(list))
    for method, _seed, t, sigma, err in records:
        acc[method][(t, sigma)].append(err)
    return {
        m: [(sigma, sum(v) / len(v)) for (t, sigma), v in sorted(pts.items())]
        for m, pts in sorted(acc.items())
    }


def render_svg(series, title="reconstruction error"):
    if not series:
        raise ParseError("no curve data to plot")
    logs = [math.log10(max(y, FLOOR)) for pts in series.values() for _, y in pts]
    lo, hi = math.floor(min(logs)), math.ceil(max(logs))
    if hi == lo:
        hi = lo + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + x * pw

    def py(y):
        return TOP + (hi - math.log10(max(y, FLOOR))) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + pw / 2:.2f}" y="14" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    step = max(1, math.ceil((hi - lo) / 8))
    for e in range(lo, hi + 1, step):
        y = TOP + (hi - e) / (hi - lo) * ph
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end" font-size="11">1e{e}</text>')
    for i in range(6):
        x = i / 5
        out.append(f'<line x1="{px(x):.2f}" y1="{TOP + ph}" x2="{px(x):.2f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(x):.2f}" y="{TOP + ph + 17}" text-anchor="middle" font-size="11">{x:.1f}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">'
               'image weight sigma</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">MSE (log scale)</text>')
    for i, (method, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline data-method="{escape(method)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 12 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="11">{escape(method)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(curve_paths, out_path, title="reconstruction error"):
    """Render the curve CSVs to ``out_path``; nothing is written on error."""
    records = read_curves(curve_paths)
    if not records:
        raise ParseError("curve input has no data rows", ", ".join(map(str, curve_paths)))
    svg = render_svg(curve_series(records), title)
    tmp = f"{out_path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(svg)
    os.replace(tmp, out_path)
    return svg
