"""Minimal SVG scatter plots of objective-space fronts (no plotting dependency)."""

from __future__ import annotations

from html import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 480, 360, 56


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def scatter_svg(points, xlabel: str, ylabel: str, title: str = "", polyline: bool = True) -> str:
    """Scatter of ``(n, 2)`` points; ``polyline`` joins them in order of the x value."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo, hi = lo - 0.05 * span, hi + 0.05 * span
    span = hi - lo

    def sx(v):
        return MARGIN + (v - lo[0]) / span[0] * (WIDTH - 2 * MARGIN)

    def sy(v):
        return HEIGHT - MARGIN - (v - lo[1]) / span[1] * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for t in _ticks(lo[0], hi[0]):
        x = sx(t)
        out.append(f'<text x="{x:.1f}" y="{HEIGHT - MARGIN + 16}" font-size="10" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(lo[1], hi[1]):
        y = sy(t)
        out.append(f'<text x="{MARGIN - 6}" y="{y + 3:.1f}" font-size="10" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="20" font-size="13" text-anchor="middle">{escape(title)}</text>')
    if polyline and len(P) > 1:
        Q = P[np.argsort(P[:, 0], kind="stable")]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in Q)
        out.append(f'<polyline points="{pts}" fill="none" stroke="seagreen" stroke-width="1"/>')
    for a, b in P:
        out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="seagreen"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
