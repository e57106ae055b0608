"""Dependency-free log-log SVG plots with byte-stable output."""

from __future__ import annotations

import math

WIDTH, HEIGHT = 480, 360
PAD = 56


def _f(x: float) -> str:
    return f"{x:.3f}"


def loglog_svg(points, slope=None, guide_slope=None, title="", xlabel="x", ylabel="y") -> str:
    """Scatter ``points`` on log axes, with the least-squares line and a guide of slope ``guide_slope``.

    Both lines pass through the geometric mean of the points.
    """
    pts = [(float(x), float(y)) for x, y in points if x > 0 and y > 0]
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="13">{_esc(title)}</text>\n'
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">'
            f'log {_esc(xlabel)}</text>\n'
            f'<text x="14" y="{HEIGHT / 2}" font-size="12" transform="rotate(-90 14 {HEIGHT / 2})" '
            f'text-anchor="middle">log {_esc(ylabel)}</text>\n'
            f'<rect x="{PAD}" y="{PAD / 2}" width="{WIDTH - 1.5 * PAD}" height="{HEIGHT - 1.5 * PAD}" '
            f'fill="none" stroke="black"/>\n')
    if not pts:
        return head + "</svg>\n"
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    lines = []
    for s in (slope, guide_slope):
        if s is not None and math.isfinite(s):
            lines.append((s, my - s * (x1 - mx), my + s * (x1 - mx), my - s * (mx - x0)))
    # widen the y range to contain the line end points
    for s, _, _, _ in lines:
        y0 = min(y0, my + s * (x0 - mx), my + s * (x1 - mx))
        y1 = max(y1, my + s * (x0 - mx), my + s * (x1 - mx))
    left, right = PAD, WIDTH - PAD / 2
    top, bottom = PAD / 2, HEIGHT - PAD

    def sx(v):
        return left + (v - x0) / (x1 - x0) * (right - left)

    def sy(v):
        return bottom - (v - y0) / (y1 - y0) * (bottom - top)

    body = []
    styles = ['stroke="steelblue" stroke-width="1.5"',
              'stroke="gray" stroke-width="1" stroke-dasharray="5,4"']
    for (s, *_), style in zip(lines, styles if slope is not None and math.isfinite(slope) else styles[1:]):
        ya, yb = my + s * (x0 - mx), my + s * (x1 - mx)
        body.append(f'<line x1="{_f(sx(x0))}" y1="{_f(sy(ya))}" x2="{_f(sx(x1))}" y2="{_f(sy(yb))}" {style}/>')
    for a, b in zip(lx, ly):
        body.append(f'<circle cx="{_f(sx(a))}" cy="{_f(sy(b))}" r="3.5" fill="firebrick"/>')
    legend = []
    if slope is not None and math.isfinite(slope):
        legend.append(f"fit slope {slope:.3f}")
    if guide_slope is not None:
        legend.append(f"guide slope {guide_slope:g}")
    if legend:
        body.append(f'<text x="{left + 8}" y="{top + 16}" font-size="11">{_esc("; ".join(legend))}</text>')
    return head + "\n".join(body) + "\n</svg>\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
