"""Static SVG renderings of cost curves and heatmaps.

Written by hand rather than through a plotting library so the bytes depend
only on the data (no timestamps, font metrics or backend versions).
"""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .analysis import CostCurve, Heatmap

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
W, H = 640, 420
ML, MR, MT, MB = 70, 170, 30, 50


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(w: int, h: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def curves_svg(curves: Sequence[tuple[str, CostCurve]], title: str = "Cumulative transition cost") -> str:
    """Cost curves, with each cutoff drawn as a marker and the tail greyed."""
    pw, ph = W - ML - MR, H - MT - MB
    ymin = min(float(c.costs.min()) for _, c in curves) if curves else 100.0
    ymax = max(float(c.costs.max()) for _, c in curves) if curves else 100.0
    ymin = min(ymin, 100.0)
    if ymax - ymin < 1e-9:
        ymax = ymin + 10.0

    def sx(x):
        return ML + pw * x / 100.0

    def sy(y):
        return MT + ph * (1.0 - (y - ymin) / (ymax - ymin))

    out = _header(W, H, title)
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _nice_ticks(0, 100):
        out.append(f'<line x1="{_f(sx(t))}" y1="{MT + ph}" x2="{_f(sx(t))}" y2="{MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_f(sx(t))}" y="{MT + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(ymin, ymax):
        out.append(f'<line x1="{ML - 4}" y1="{_f(sy(t))}" x2="{ML}" y2="{_f(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{ML - 6}" y="{_f(sy(t) + 4)}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">scenarios covered (%)</text>')
    out.append(f'<text x="16" y="{MT + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MT + ph / 2:.1f})">normalized cost (%)</text>')
    for k, (name, c) in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        cut = c.cutoff.coverage
        head = [(x, y) for x, y in zip(c.coverage, c.costs) if cut is None or x <= cut + 1e-12]
        tail = [(x, y) for x, y in zip(c.coverage, c.costs) if cut is not None and x >= cut - 1e-12]
        for pts, stroke in ((head, color), (tail, "#bbbbbb")):
            if len(pts) >= 2:
                path = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in pts)
                out.append(f'<polyline points="{path}" fill="none" stroke="{stroke}" stroke-width="1.5"/>')
            elif len(pts) == 1:
                out.append(f'<circle cx="{_f(sx(pts[0][0]))}" cy="{_f(sy(pts[0][1]))}" r="2" fill="{stroke}"/>')
        if cut is not None:
            out.append(f'<circle cx="{_f(sx(cut))}" cy="{_f(sy(c.cutoff.cost))}" r="3.5" '
                       f'fill="none" stroke="{color}"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<line x1="{W - MR + 12}" y1="{ly - 4}" x2="{W - MR + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 34}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cell_color(v: float) -> str:
    if not np.isfinite(v):
        return "#eeeeee"
    # white (no failure) to dark red (all failures)
    r = 255 - int(round(v * 80))
    g = int(round(255 * (1 - v)))
    return f"#{r:02x}{g:02x}{g:02x}"


def heatmap_svg(hm: Heatmap, title: str | None = None) -> str:
    na, nb = len(hm.levels_a), len(hm.levels_b)
    cell = 48
    w, h = ML + nb * cell + 40, MT + na * cell + MB + 10
    out = _header(w, h, title or f"failure share: {hm.feature_a} vs {hm.feature_b}")
    vals = hm.values
    for i in range(na):
        # first level of feature_a at the bottom
        y = MT + (na - 1 - i) * cell
        out.append(f'<text x="{ML - 6}" y="{y + cell / 2 + 4:.1f}" text-anchor="end">{hm.levels_a[i]:.3g}</text>')
        for j in range(nb):
            x = ML + j * cell
            v = vals[i, j]
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_cell_color(v)}" stroke="white"/>')
            label = "n/a" if not np.isfinite(v) else f"{v:.2f}"
            out.append(f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle">{label}</text>')
    for j in range(nb):
        out.append(f'<text x="{ML + j * cell + cell / 2:.1f}" y="{MT + na * cell + 14}" '
                   f'text-anchor="middle">{hm.levels_b[j]:.3g}</text>')
    out.append(f'<text x="{ML + nb * cell / 2:.1f}" y="{h - 12}" text-anchor="middle">{escape(hm.feature_b)}</text>')
    out.append(f'<text x="14" y="{MT + na * cell / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {MT + na * cell / 2:.1f})">{escape(hm.feature_a)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def convergence_svg(series: Sequence[tuple[str, Sequence[int], Sequence[float]]], title: str) -> str:
    """Metric-vs-sample-count lines, each normalized by its final value."""
    pw, ph = W - ML - MR, H - MT - MB
    xmax = max((max(xs) for _, xs, _ in series if len(xs)), default=1)
    pts_all = []
    for name, xs, ys in series:
        final = ys[-1] if ys and ys[-1] not in (None, 0) else None
        pts = [(x, y / final) for x, y in zip(xs, ys) if y is not None and final]
        pts_all.append((name, pts))
    ys_flat = [y for _, pts in pts_all for _, y in pts] or [1.0]
    lo, hi = min(min(ys_flat), 0.9), max(max(ys_flat), 1.1)

    def sx(x):
        return ML + pw * x / xmax

    def sy(y):
        return MT + ph * (1.0 - (y - lo) / (hi - lo))

    out = _header(W, H, title)
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for band in (0.95, 1.05):
        out.append(f'<line x1="{ML}" y1="{_f(sy(band))}" x2="{ML + pw}" y2="{_f(sy(band))}" '
                   'stroke="#999999" stroke-dasharray="4 3"/>')
    for t in _nice_ticks(lo, hi):
        out.append(f'<text x="{ML - 6}" y="{_f(sy(t) + 4)}" text-anchor="end">{t:g}</text>')
    for t in _nice_ticks(0, xmax):
        out.append(f'<text x="{_f(sx(t))}" y="{MT + ph + 16}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">scenarios evaluated</text>')
    for k, (name, pts) in enumerate(pts_all):
        color = PALETTE[k % len(PALETTE)]
        if len(pts) >= 2:
            path = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<line x1="{W - MR + 12}" y1="{ly - 4}" x2="{W - MR + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 34}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
