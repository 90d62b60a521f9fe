"""Minimal SVG emitters for pole clouds and secant bound curves."""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from fracnet.ensemble import PoleCloud

WIDTH = 640
HEIGHT = 480
PAD = 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class _Frame:
    def __init__(self, xlim: tuple[float, float], ylim: tuple[float, float]) -> None:
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim

    def x(self, v: float) -> float:
        return PAD + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * PAD)

    def y(self, v: float) -> float:
        return HEIGHT - PAD - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * PAD)


def _document(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>',
        head,
        f"<title>{escape(title)}</title>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        *body,
        f'<text x="{WIDTH / 2:.1f}" y="{PAD / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
        "</svg>",
        "",
    ])


def _axes(fr: _Frame, xlabel: str, ylabel: str) -> list[str]:
    out = [f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" '
           f'height="{HEIGHT - 2 * PAD}" fill="none" stroke="black"/>']
    for v in np.linspace(fr.x0, fr.x1, 5):
        out.append(f'<text x="{fr.x(v):.1f}" y="{HEIGHT - PAD + 16}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="10">{v:.3g}</text>')
    for v in np.linspace(fr.y0, fr.y1, 5):
        out.append(f'<text x="{PAD - 4}" y="{fr.y(v) + 3:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{v:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="12" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 12 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>')
    return out


def pole_cloud_svg(cloud: PoleCloud, title: str = "pole cloud") -> str:
    """Poles as dots over the shaded unstable wedge ``|arg z| < alpha pi / 2``."""
    poles = cloud.poles()
    R = float(np.max(np.abs(poles), initial=1.0)) * 1.1
    fr = _Frame((-R, R), (-R * 0.75, R * 0.75))
    body = []

    if math.isfinite(cloud.alpha):
        half = cloud.alpha * math.pi / 2.0
        # long enough to leave the plotting window in every direction
        far = 4.0 * R
        tip = [(far * math.cos(t), far * math.sin(t))
               for t in np.linspace(-half, half, 64)]
        pts = " ".join(f"{fr.x(x):.2f},{fr.y(y):.2f}"
                       for x, y in [(0.0, 0.0), *tip])
        body.append(f'<clipPath id="plot"><rect x="{PAD}" y="{PAD}" '
                    f'width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}"/></clipPath>')
        body.append(f'<polygon points="{pts}" fill="#f4cccc" '
                    f'fill-opacity="0.6" clip-path="url(#plot)"/>')
        for t in (half, -half):
            body.append(
                f'<line x1="{fr.x(0):.2f}" y1="{fr.y(0):.2f}" '
                f'x2="{fr.x(far * math.cos(t)):.2f}" y2="{fr.y(far * math.sin(t)):.2f}" '
                f'stroke="#990000" stroke-dasharray="4 3" clip-path="url(#plot)"/>')

    body.append(f'<line x1="{fr.x(-R):.2f}" y1="{fr.y(0):.2f}" x2="{fr.x(R):.2f}" '
                f'y2="{fr.y(0):.2f}" stroke="#999999"/>')
    body.append(f'<line x1="{fr.x(0):.2f}" y1="{fr.y(fr.y0):.2f}" x2="{fr.x(0):.2f}" '
                f'y2="{fr.y(fr.y1):.2f}" stroke="#999999"/>')
    body.extend(
        f'<circle cx="{fr.x(z.real):.2f}" cy="{fr.y(z.imag):.2f}" r="1.5" fill="black"/>'
        for z in poles if abs(z.imag) <= fr.y1)

    return _document(_axes(fr, "Re", "Im") + body, title)


def bound_curve_svg(curves: Mapping[int, Sequence[tuple[float, float]]],
                    title: str = "secant bound") -> str:
    """Plot ``gamma_max(alpha)`` for several loop lengths; ``inf`` is omitted."""
    finite = [(a, b) for c in curves.values() for a, b in c if math.isfinite(b)]
    alphas = [a for c in curves.values() for a, _ in c]
    xmin, xmax = (min(alphas), max(alphas)) if alphas else (0.0, 2.0)
    # the curves blow up at alpha = 2/n; cap the axis so the shape stays visible
    ymax = min(max((b for _, b in finite), default=2.0), 10.0)
    fr = _Frame((xmin, xmax), (0.0, ymax * 1.05))

    body = []
    for i, (n, curve) in enumerate(sorted(curves.items())):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{fr.x(a):.2f},{fr.y(min(b, ymax * 1.05)):.2f}"
                       for a, b in curve if math.isfinite(b))
        if pts:
            body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                        f'stroke-width="1.5"/>')
        body.append(f'<text x="{WIDTH - PAD - 4}" y="{PAD + 14 * (i + 1)}" '
                    f'text-anchor="end" fill="{color}" font-family="sans-serif" '
                    f'font-size="11">n = {n}</text>')

    return _document(_axes(fr, "alpha", "gamma bound") + body, title)
