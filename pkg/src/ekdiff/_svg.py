"""Minimal line-plot SVG writer (no plotting library involved)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_W, _H = 640, 420
_L, _R, _T, _B = 70, 20, 40, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "", logy: bool = False) -> str:
    """series: list of (label, x, y).  Returns the SVG document as text."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = [np.asarray(s[2], float) for s in series]
    if logy:
        ys = [np.log10(np.where(y > 0, y, np.nan)) for y in ys]
    yall = np.concatenate(ys)
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    y0, y1 = float(np.nanmin(yall)), float(np.nanmax(yall))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return _L + (v - x0) / (x1 - x0) * (_W - _L - _R)

    def py(v):
        return _H - _B - (v - y0) / (y1 - y0) * (_H - _T - _B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{_L}" y="{_T}" width="{_W - _L - _R}" height="{_H - _T - _B}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.2f}" y1="{_H - _B}" x2="{px(v):.2f}" y2="{_H - _B + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{_H - _B + 18}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{v:g}</text>')
    for v in _ticks(y0, y1):
        lab = f"1e{v:g}" if logy else f"{v:g}"
        out.append(f'<line x1="{_L - 5}" y1="{py(v):.2f}" x2="{_L}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{_L - 8}" y="{py(v) + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{lab}</text>')
    out.append(f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{_H / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 16 {_H / 2})">{escape(ylabel)}</text>')
    for k, ((label, x, _), y) in enumerate(zip(series, ys)):
        x = np.asarray(x, float)
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _R - 8}" y="{_T + 18 + 16 * k}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="12" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
