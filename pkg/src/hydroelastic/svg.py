"""Minimal deterministic SVG line plots.

Coordinates are formatted with a fixed number of decimals so that the same
data always yields the same bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#17becf", "#7f7f7f", "#bcbd22"]


@dataclass
class Panel:
    title: str
    xlim: tuple
    ylim: tuple
    xlabel: str = ""
    ylabel: str = ""
    series: list = field(default_factory=list)  # (label, xs, ys)

    def add(self, label: str, xs, ys):
        self.series.append((label, list(xs), list(ys)))


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _ticks(lo: float, hi: float, n: int = 5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel_svg(p: Panel, x0: float, y0: float, w: float, h: float) -> list:
    (xa, xb), (ya, yb) = p.xlim, p.ylim

    def X(x):
        return x0 + (x - xa) / (xb - xa) * w

    def Y(y):
        return y0 + h - (y - ya) / (yb - ya) * h

    out = [f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(w)}" height="{_fmt(h)}" '
           'fill="none" stroke="black"/>',
           f'<text x="{_fmt(x0 + w / 2)}" y="{_fmt(y0 - 8)}" text-anchor="middle" '
           f'font-size="13">{p.title}</text>']
    for t in _ticks(xa, xb):
        out.append(f'<line x1="{_fmt(X(t))}" y1="{_fmt(y0 + h)}" x2="{_fmt(X(t))}" '
                   f'y2="{_fmt(y0 + h + 4)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X(t))}" y="{_fmt(y0 + h + 16)}" text-anchor="middle" '
                   f'font-size="10">{t:.4g}</text>')
    for t in _ticks(ya, yb):
        out.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(Y(t))}" x2="{_fmt(x0)}" '
                   f'y2="{_fmt(Y(t))}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(Y(t) + 3)}" text-anchor="end" '
                   f'font-size="10">{t:.4g}</text>')
    out.append(f'<text x="{_fmt(x0 + w / 2)}" y="{_fmt(y0 + h + 32)}" text-anchor="middle" '
               f'font-size="12">{p.xlabel}</text>')
    out.append(f'<text x="{_fmt(x0 - 40)}" y="{_fmt(y0 + h / 2)}" text-anchor="middle" '
               f'font-size="12" transform="rotate(-90 {_fmt(x0 - 40)} {_fmt(y0 + h / 2)})">'
               f'{p.ylabel}</text>')
    out.append(f'<clipPath id="clip{int(x0)}_{int(y0)}"><rect x="{_fmt(x0)}" y="{_fmt(y0)}" '
               f'width="{_fmt(w)}" height="{_fmt(h)}"/></clipPath>')
    for i, (label, xs, ys) in enumerate(p.series):
        colour = PALETTE[i % len(PALETTE)]
        for run in _runs(xs, ys):
            pts = " ".join(f"{_fmt(X(x))},{_fmt(Y(y))}" for x, y in run)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" '
                       f'stroke-width="1.2" clip-path="url(#clip{int(x0)}_{int(y0)})"/>')
        ly = y0 + 14 + 14 * i
        out.append(f'<text x="{_fmt(x0 + w - 6)}" y="{_fmt(ly)}" text-anchor="end" '
                   f'font-size="10" fill="{colour}">{label}</text>')
    return out


def _runs(xs, ys, gap_factor: float = 20.0):
    """Split a polyline where consecutive x samples jump (separate pieces)."""
    if not xs:
        return []
    steps = [abs(b - a) for a, b in zip(xs, xs[1:])]
    typical = sorted(steps)[len(steps) // 2] if steps else 0.0
    runs, cur = [], [(xs[0], ys[0])]
    for (x, y), s in zip(list(zip(xs, ys))[1:], steps):
        if typical > 0.0 and s > gap_factor * typical:
            runs.append(cur)
            cur = []
        cur.append((x, y))
    runs.append(cur)
    return runs


def figure(panels, panel_width: float = 420.0, panel_height: float = 300.0) -> str:
    """Panels stacked vertically."""
    margin_l, margin_t, gap = 70.0, 30.0, 70.0
    width = margin_l + panel_width + 30.0
    height = margin_t + len(panels) * (panel_height + gap)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
           f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
           '<rect width="100%" height="100%" fill="white"/>']
    for i, p in enumerate(panels):
        out += _panel_svg(p, margin_l, margin_t + i * (panel_height + gap),
                          panel_width, panel_height)
    out.append("</svg>")
    return "\n".join(out) + "\n"


DISPERSION_COLUMNS = ["panel", "k", "lambda1", "lambda2"]


def dispersion_svg_from_csv(text: str, windows: dict) -> str:
    """Rebuild the dispersion figure from its CSV.

    ``windows`` maps panel name to ((x0, x1), (y0, y1)); panels appear in
    the order of their first row in the CSV.
    """
    rows = list(csv.DictReader(io.StringIO(text)))
    names = list(dict.fromkeys(r["panel"] for r in rows))
    names += [n for n in windows if n not in names]
    panels = []
    for name in names:
        xl, yl = windows[name]
        p = Panel(f"curves A_k, {name}", tuple(xl), tuple(yl), "lambda1", "lambda2")
        ks = sorted({int(r["k"]) for r in rows if r["panel"] == name})
        for k in ks:
            sel = [r for r in rows if r["panel"] == name and int(r["k"]) == k]
            p.add(f"k={k}", [float(r["lambda1"]) for r in sel], [float(r["lambda2"]) for r in sel])
        panels.append(p)
    return figure(panels)
