"""Minimal SVG output: one polyline chart and one pie chart, no external
plotting dependencies. Good enough for training curves and gate mixes."""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 400
MARGIN = 56

_PIE_COLORS = ("#4878cf", "#ee854a", "#6acc65", "#d65f5f",
               "#956cb4", "#8c613c", "#dc7ec0", "#797979")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def line_svg(xs, ys, title: str, x_label: str, y_label: str) -> str:
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if not xs:
        xs, ys = [0.0], [0.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    inner_w = WIDTH - 2 * MARGIN
    inner_h = HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (x - x_lo) / (x_hi - x_lo) * inner_w

    def sy(y):
        return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * inner_h

    points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2})">{y_label}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10">{_fmt(x_lo)}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" text-anchor="end" '
        f'font-size="10">{_fmt(x_hi)}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" text-anchor="end" '
        f'font-size="10">{_fmt(y_lo)}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" text-anchor="end" font-size="10">{_fmt(y_hi)}</text>',
        f'<polyline fill="none" stroke="#4878cf" stroke-width="1.5" points="{points}"/>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def pie_svg(labels, fractions, title: str) -> str:
    cx, cy, radius = WIDTH / 2 - 80, HEIGHT / 2 + 10, 130
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    angle = -math.pi / 2
    slices = [(l, f) for l, f in zip(labels, fractions) if f > 0.0]
    for i, (label, frac) in enumerate(slices):
        color = _PIE_COLORS[i % len(_PIE_COLORS)]
        if frac >= 1.0 - 1e-12:
            parts.append(f'<circle cx="{cx}" cy="{cy}" r="{radius}" fill="{color}"/>')
        else:
            end = angle + 2 * math.pi * frac
            x0, y0 = cx + radius * math.cos(angle), cy + radius * math.sin(angle)
            x1, y1 = cx + radius * math.cos(end), cy + radius * math.sin(end)
            large = 1 if frac > 0.5 else 0
            parts.append(
                f'<path d="M{cx:.2f},{cy:.2f} L{x0:.2f},{y0:.2f} '
                f'A{radius},{radius} 0 {large} 1 {x1:.2f},{y1:.2f} Z" fill="{color}"/>')
            angle = end
        ly = 60 + 20 * i
        parts.append(f'<rect x="{WIDTH - 170}" y="{ly - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{WIDTH - 152}" y="{ly}" font-size="12">'
                     f'{label} ({100 * frac:.1f}%)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
