"""SVG log-log plot of a friend-distance distribution and its fitted power laws."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from geofriends.distfit import BinnedDistribution, DoublePowerLawFit, log_bin

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=40, bottom=55)


class _Axes:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = (math.floor(math.log10(v)) if i == 0 else math.ceil(math.log10(v)) for i, v in enumerate(xlim))
        self.y0, self.y1 = (math.floor(math.log10(v)) if i == 0 else math.ceil(math.log10(v)) for i, v in enumerate(ylim))
        if self.x1 == self.x0:
            self.x1 += 1
        if self.y1 == self.y0:
            self.y1 += 1
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (math.log10(x) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return MARGIN["top"] + (self.y1 - math.log10(y)) / (self.y1 - self.y0) * self.h


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(binned: BinnedDistribution, fit: DoublePowerLawFit | None = None, distances=None,
               title: str = "P_D(D=d)") -> str:
    """Log-log scatter of raw and binned densities with the fitted lines overlaid."""
    raw = None
    if distances is not None and len(distances):
        # fine bins stand in for the unbinned empirical points
        raw = log_bin(distances, 50, binned.edges[0], binned.edges[-1])
    pos = binned.densities[binned.densities > 0]
    ys = list(pos)
    if raw is not None:
        ys.extend(raw.densities[raw.densities > 0])
    if not ys:
        ys = [1.0]
    ax = _Axes((binned.edges[0], binned.edges[-1]), (min(ys), max(ys)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title} (log-log)</text>',
    ]
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{ax.w}" height="{ax.h}" fill="none" stroke="#000000"/>')
    for e in range(ax.x0, ax.x1 + 1):
        x = _fmt(ax.px(10.0 ** e))
        out.append(f'<line x1="{x}" y1="{top + ax.h}" x2="{x}" y2="{top + ax.h + 5}" stroke="#000000"/>')
        out.append(f'<text x="{x}" y="{top + ax.h + 20}" text-anchor="middle" font-family="sans-serif" font-size="12">1e{e}</text>')
    for e in range(ax.y0, ax.y1 + 1):
        y = _fmt(ax.py(10.0 ** e))
        out.append(f'<line x1="{left - 5}" y1="{y}" x2="{left}" y2="{y}" stroke="#000000"/>')
        out.append(f'<text x="{left - 8}" y="{y}" text-anchor="end" dominant-baseline="middle" font-family="sans-serif" font-size="12">1e{e}</text>')
    out.append(f'<text x="{left + ax.w / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">d [km]</text>')
    out.append(f'<text x="16" y="{top + ax.h / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 16 {top + ax.h / 2:.0f})">{title}</text>')

    if raw is not None:
        for c, dens in zip(raw.centers, raw.densities):
            if dens > 0:
                out.append(f'<circle cx="{_fmt(ax.px(c))}" cy="{_fmt(ax.py(dens))}" r="1.5" fill="#9e9e9e"/>')
    for c, dens in zip(binned.centers, binned.densities):
        if dens > 0:
            out.append(f'<rect x="{_fmt(ax.px(c) - 3)}" y="{_fmt(ax.py(dens) - 3)}" width="6" height="6" '
                       f'fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')

    if fit is not None:
        lo, hi = binned.edges[0], binned.edges[-1]
        if fit.model_choice == "double":
            pieces = [(fit.intra, lo, fit.d_s), (fit.inter, fit.d_s, hi)]
        else:
            pieces = [(fit.single_fallback, lo, hi)]
        for seg, a, b in pieces:
            xs = np.geomspace(a, b, 40)
            pts = [(ax.px(x), ax.py(y)) for x, y in zip(xs, seg.density(xs)) if y > 0]
            # clip to the plot box vertically
            pts = [(x, min(max(y, top), top + ax.h)) for x, y in pts]
            out.append('<polyline fill="none" stroke="#c62828" stroke-width="2" points="'
                       + " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts) + '"/>')
        if fit.model_choice == "double":
            x = _fmt(ax.px(fit.d_s))
            out.append(f'<line x1="{x}" y1="{top}" x2="{x}" y2="{top + ax.h}" stroke="#555555" stroke-dasharray="4 3"/>')
            label = f"gamma1={fit.gamma1:.2f}  gamma2={fit.gamma2:.2f}  d_s={fit.d_s:.3g} km"
        else:
            label = f"single power law  gamma={fit.single_fallback.gamma:.2f}"
        out.append(f'<text x="{left + ax.w - 8}" y="{top + 18}" text-anchor="end" font-family="sans-serif" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, *args, **kwargs) -> None:
    Path(path).write_text(render_svg(*args, **kwargs), encoding="utf-8")
