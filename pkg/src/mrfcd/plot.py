"""Dependency-free SVG line plots for risk sweeps and threshold curves."""

from __future__ import annotations

import math
import os
import tempfile
from xml.sax.saxutils import escape

from mrfcd.errors import ValidationError
from mrfcd.lecam import BoundReport
from mrfcd.risk import RiskReport

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _num(x: float) -> str:
    return format(x, ".6g")


def _series(reports):
    if all(isinstance(r, RiskReport) for r in reports):
        xs = [r.n for r in reports]
        series = [("empirical optimal risk", [r.empirical_optimal_risk for r in reports])]
        if any(r.theoretical_lower_bound is not None for r in reports):
            series.append(("Le Cam lower bound", [r.theoretical_lower_bound for r in reports]))
        return xs, series, "samples per dataset n", "risk (type I + type II, probability)", "Risk vs sample size"
    if all(isinstance(r, BoundReport) for r in reports):
        key = {"ising-easy": "alpha", "ising-clique": "beta", "gaussian": "gamma"}.get(reports[0].kind, "p")
        keys = {r.params.get(key) for r in reports}
        if len(keys) == 1:
            key = "p"
        xs = [float(r.params[key]) for r in reports]
        ys = [r.n_threshold for r in reports]
        return xs, [("sample threshold", ys)], key, "necessary samples n", f"Threshold vs {key}"
    raise ValidationError("plot needs reports of a single type")


def render_svg(reports) -> str:
    if not reports:
        raise ValidationError("nothing to plot")
    xs, series, xlabel, ylabel, title = _series(list(reports))
    finite = [y for _, ys in series for y in ys if y is not None and math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(finite), max(finite)) if finite else (0.0, 1.0)
    y0 = min(y0, 0.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{MARGIN["left"]}" y1="{sy(y0):.2f}" x2="{WIDTH - MARGIN["right"]}" y2="{sy(y0):.2f}" stroke="black"/>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" y2="{HEIGHT - MARGIN["bottom"]}" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        parts.append(f'<text x="{sx(xv):.2f}" y="{HEIGHT - MARGIN["bottom"] + 16}" text-anchor="middle" '
                     f'font-size="11">{_num(xv)}</text>')
        parts.append(f'<text x="{MARGIN["left"] - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end" '
                     f'font-size="11">{_num(yv)}</text>')
    parts.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 18}" text-anchor="middle" '
                 f'font-size="13">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" font-size="13" '
                 f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>')
    for idx, (name, ys) in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        pts = [(sx(x), sy(y)) for x, y in zip(xs, ys) if y is not None and math.isfinite(y)]
        parts.append(f'<g class="series" data-name="{escape(name)}">')
        if len(pts) > 1:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for a, b in pts:
            parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3.5" fill="{color}"/>')
        parts.append("</g>")
        ly = MARGIN["top"] + 14 + 16 * idx
        parts.append(f'<text x="{WIDTH - MARGIN["right"] - 4}" y="{ly}" text-anchor="end" font-size="12" '
                     f'fill="{color}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_plot(reports, path: str) -> str:
    """Write an SVG of ``reports`` to ``path`` atomically; returns the path."""
    write_atomic(path, render_svg(reports))
    return path
