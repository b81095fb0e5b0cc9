"""Minimal self-contained SVG box plots (five-number boxes, min/max whiskers)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

PANEL_H = 260
TOP = 40
LEFT = 70
RIGHT = 150
BOTTOM = 50
SLOT_W = 110


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 12))
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def box_plot_svg(title: str, xlabel: str, categories: list[str], panels: list[tuple[str, dict]]) -> str:
    """``panels`` holds ``(ylabel, {series: [values per category]})`` pairs, drawn top to bottom."""
    n_series = max(len(series) for _, series in panels)
    width = LEFT + RIGHT + SLOT_W * len(categories)
    height = TOP + len(panels) * (PANEL_H + BOTTOM)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for p, (ylabel, series) in enumerate(panels):
        y0 = TOP + p * (PANEL_H + BOTTOM)
        vals = [v for per_cat in series.values() for cat in per_cat for v in cat]
        lo, hi = (float(min(vals)), float(max(vals))) if vals else (0.0, 1.0)
        ticks = _nice_ticks(lo, hi)
        t_lo, t_hi = ticks[0], ticks[-1]

        def ypix(v, y0=y0, t_lo=t_lo, t_hi=t_hi):
            return y0 + PANEL_H - (v - t_lo) / (t_hi - t_lo) * PANEL_H

        x_end = LEFT + SLOT_W * len(categories)
        out.append(f'<rect x="{LEFT}" y="{y0}" width="{x_end - LEFT}" height="{PANEL_H}" '
                   f'fill="none" stroke="#444"/>')
        for t in ticks:
            yt = ypix(t)
            out.append(f'<line x1="{LEFT - 4}" y1="{yt:.2f}" x2="{x_end}" y2="{yt:.2f}" stroke="#ddd"/>')
            out.append(f'<text x="{LEFT - 7}" y="{yt + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
        out.append(f'<text x="18" y="{y0 + PANEL_H / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {y0 + PANEL_H / 2})">{escape(ylabel)}</text>')
        box_w = (SLOT_W - 20) / max(n_series, 1)
        for c, cat in enumerate(categories):
            xc = LEFT + SLOT_W * c
            out.append(f'<text x="{xc + SLOT_W / 2}" y="{y0 + PANEL_H + 18}" text-anchor="middle">{escape(cat)}</text>')
            for s, (name, per_cat) in enumerate(series.items()):
                data = np.asarray(per_cat[c], dtype=float)
                if data.size == 0:
                    continue
                mn, q1, med, q3, mx = np.percentile(data, [0, 25, 50, 75, 100])
                color = PALETTE[s % len(PALETTE)]
                x = xc + 10 + s * box_w
                mid = x + box_w / 2
                out.append(f'<line x1="{mid:.2f}" y1="{ypix(mx):.2f}" x2="{mid:.2f}" y2="{ypix(mn):.2f}" stroke="{color}"/>')
                for v in (mn, mx):
                    out.append(f'<line x1="{x + box_w * 0.3:.2f}" y1="{ypix(v):.2f}" x2="{x + box_w * 0.7:.2f}" '
                               f'y2="{ypix(v):.2f}" stroke="{color}"/>')
                out.append(f'<rect x="{x + 2:.2f}" y="{ypix(q3):.2f}" width="{box_w - 4:.2f}" '
                           f'height="{max(ypix(q1) - ypix(q3), 0.5):.2f}" fill="{color}" fill-opacity="0.25" '
                           f'stroke="{color}"><title>{escape(name)} {escape(cat)}: median {_fmt(med)}</title></rect>')
                out.append(f'<line x1="{x + 2:.2f}" y1="{ypix(med):.2f}" x2="{x + box_w - 2:.2f}" '
                           f'y2="{ypix(med):.2f}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{(LEFT + x_end) / 2}" y="{y0 + PANEL_H + 36}" text-anchor="middle">{escape(xlabel)}</text>')
        for s, name in enumerate(series):
            ly = y0 + 16 + 18 * s
            out.append(f'<rect x="{x_end + 15}" y="{ly - 10}" width="12" height="12" fill="{PALETTE[s % len(PALETTE)]}" '
                       f'fill-opacity="0.5"/>')
            out.append(f'<text x="{x_end + 32}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
