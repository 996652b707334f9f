"""Minimal SVG 1.1 line plots: polylines, a frame and tick labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 36, 50
COLORS = ("#1f4e9a", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555")


@dataclass(frozen=True)
class Curve:
    xs: np.ndarray
    ys: np.ndarray
    label: str = ""


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _limits(values: list[np.ndarray]) -> tuple[float, float]:
    finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.array([])
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(curves: list[Curve], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Render curves as an SVG document. Non-finite samples break a line."""
    x0, x1 = _limits([np.asarray(c.xs, float) for c in curves])
    y0, y1 = _limits([np.asarray(c.ys, float) for c in curves])
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + (y1 - y) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        y = sy(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{t:.4g}</text>')
    for i, c in enumerate(curves):
        color = COLORS[i % len(COLORS)]
        xs = np.asarray(c.xs, float)
        ys = np.asarray(c.ys, float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        run: list[str] = []
        for x, y, good in zip(xs, ys, ok):
            if good:
                run.append(f"{sx(x):.2f},{sy(y):.2f}")
            elif run:
                out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(run)}"/>')
                run = []
        if run:
            out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(run)}"/>')
        if c.label:
            out.append(
                f'<text x="{MARGIN_L + pw - 6}" y="{MARGIN_T + 14 + 14 * i}" font-size="11" '
                f'text-anchor="end" fill="{color}">{escape(c.label)}</text>'
            )
    if title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{MARGIN_L + pw / 2:.0f}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{MARGIN_T + ph / 2:.0f}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.0f})">{escape(ylabel)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
