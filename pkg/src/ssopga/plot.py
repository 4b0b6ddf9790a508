"""Dependency-free SVG rendering of iteration traces.

Output is a pure function of the parsed traces and their file names, so the
same inputs always give byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .solvers import IterationTrace

WIDTH, HEIGHT = 960, 420
PANEL_W, PANEL_H = 380, 300
MARGIN_L, MARGIN_T = 70, 50
PANEL_GAP = 100
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _iterate_series(trace):
    # scalar runs plot the value itself, vector runs the max-norm
    if trace.store_iterates and trace.dimension == 1:
        return np.array([v[0] for v in trace.iterates], dtype=float)
    return np.asarray(trace.iterate_inf, dtype=float)


def _num(v):
    return f"{v:.2f}"


def _label(v):
    return f"{v:.4g}"


class _Panel:
    def __init__(self, x0, title, series, xs):
        self.x0, self.title = x0, title
        finite = [s[np.isfinite(s)] for s in series]
        vals = np.concatenate(finite) if finite else np.array([])
        self.log = vals.size > 0 and bool((vals > 0).all())
        if self.log:
            vals = np.log10(vals)
        self.ylo, self.yhi = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
        if self.yhi - self.ylo < 1e-12:
            self.ylo, self.yhi = self.ylo - 0.5, self.yhi + 0.5
        xmax = max((float(x[-1]) for x in xs if len(x)), default=1.0)
        self.xhi = xmax if xmax > 0 else 1.0

    def px(self, t):
        return self.x0 + PANEL_W * t / self.xhi

    def py(self, v):
        if self.log:
            v = math.log10(v)
        return MARGIN_T + PANEL_H * (1.0 - (v - self.ylo) / (self.yhi - self.ylo))

    def frame(self):
        x0, y0 = self.x0, MARGIN_T
        ylab = f"log10 {self.title}" if self.log else self.title
        out = [
            f'<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#000"/>',
            f'<text x="{x0 + PANEL_W / 2:.1f}" y="{y0 - 12}" text-anchor="middle">{escape(self.title)} vs iteration</text>',
            f'<text x="{x0 + PANEL_W / 2:.1f}" y="{y0 + PANEL_H + 36}" text-anchor="middle">iteration</text>',
            f'<text x="{x0 - 50}" y="{y0 + PANEL_H / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 {x0 - 50} {y0 + PANEL_H / 2:.1f})">{escape(ylab)}</text>',
            f'<text x="{x0}" y="{y0 + PANEL_H + 16}" text-anchor="middle">0</text>',
            f'<text x="{x0 + PANEL_W}" y="{y0 + PANEL_H + 16}" text-anchor="middle">{_label(self.xhi)}</text>',
            f'<text x="{x0 - 6}" y="{y0 + PANEL_H}" text-anchor="end">{_label(self.ylo)}</text>',
            f'<text x="{x0 - 6}" y="{y0 + 10}" text-anchor="end">{_label(self.yhi)}</text>',
        ]
        return out

    def polyline(self, xs, ys, color):
        pts = [
            f"{_num(self.px(t))},{_num(self.py(v))}"
            for t, v in zip(xs, ys)
            if math.isfinite(v) and (v > 0 or not self.log)
        ]
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>'


def render_svg(traces, names):
    """SVG text for ``traces`` (list of :class:`IterationTrace`) labelled by ``names``."""
    if not traces:
        raise ValueError("at least one trace is required")
    xs = [np.asarray(tr.iters, dtype=float) for tr in traces]
    its = [_iterate_series(tr) for tr in traces]
    ens = [tr.energy_array() for tr in traces]
    left = _Panel(MARGIN_L, "iterate", its, xs)
    right = _Panel(MARGIN_L + PANEL_W + PANEL_GAP, "energy", ens, xs)
    legend_y = MARGIN_T + PANEL_H + 60
    height = max(HEIGHT, legend_y + 18 * len(traces))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{height}" fill="#fff"/>',
    ]
    out += left.frame() + right.frame()
    for k, (x, a, e) in enumerate(zip(xs, its, ens)):
        color = PALETTE[k % len(PALETTE)]
        out.append(left.polyline(x, a, color))
        out.append(right.polyline(x, e, color))
    for k, name in enumerate(names):
        y = legend_y + 18 * k
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<line x1="{MARGIN_L}" y1="{y - 4}" x2="{MARGIN_L + 24}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN_L + 30}" y="{y}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_traces(paths, out_path):
    """Parse trace CSVs and write a two-panel SVG to ``out_path``.

    Raises :class:`~ssopga.solvers.TraceParseError` naming the file and line
    of the first malformed trace.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValueError("at least one trace file is required")
    traces = [IterationTrace.from_csv(p) for p in paths]
    svg = render_svg(traces, [p.stem for p in paths])
    Path(out_path).write_text(svg)
    return Path(out_path)
