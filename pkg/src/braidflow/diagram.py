"""Deterministic SVG rendering of strands in the (x, t)-plane."""

from __future__ import annotations

import numpy as np

from .extraction import detect_crossings
from .flow import StrandSet

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _under_strands(strands: StrandSet, events) -> list[tuple[float, int]]:
    order = [int(i) for i in np.argsort(strands.x[0], kind="stable")]
    out = []
    for e in events:
        left, right = order[e.slot - 1], order[e.slot]
        out.append((e.time, right if e.sign > 0 else left))
        order[e.slot - 1], order[e.slot] = right, left
    return out


def _pieces(t, x, gaps, half):
    """Split one polyline at the gap windows |t - tc| < half."""
    runs, cur = [], []
    for i in range(len(t)):
        if any(abs(t[i] - tc) < half for tc in gaps):
            if cur:
                runs.append(cur)
                cur = []
            continue
        cur.append((x[i], t[i]))
    if cur:
        runs.append(cur)
    return [r for r in runs if len(r) >= 2]


def render_svg(strands: StrandSet, width_per_strand: float = 80.0, height_per_unit: float = 240.0,
               gap: float | None = None) -> str:
    events = detect_crossings(strands)
    unders = _under_strands(strands, events)
    t = strands.times
    x = strands.x
    n = strands.n
    span = float(t[-1] - t[0]) or 1.0
    half = gap if gap is not None else 0.04 * span / max(len(events), 1) ** 0.5
    xmin, xmax = float(np.min(x)), float(np.max(x))
    pad = 0.5 / max(n, 1)
    W = width_per_strand * n
    H = height_per_unit * max(span, 1.0)
    margin = 20.0

    def px(v):
        return margin + (v - xmin + pad) / (xmax - xmin + 2 * pad) * W

    def py(v):
        return margin + (v - t[0]) / span * H

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + 2 * margin:.0f}" '
        f'height="{H + 2 * margin:.0f}" viewBox="0 0 {W + 2 * margin:.0f} {H + 2 * margin:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for j in range(n):
        gaps = [tc for tc, s in unders if s == j]
        color = COLORS[j % len(COLORS)]
        for run in _pieces(t, x[:, j], gaps, half):
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in run)
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="3" '
                         f'stroke-linecap="round" points="{pts}"/>')
    for j in range(n):
        lines.append(f'<circle cx="{px(x[0, j]):.2f}" cy="{py(t[0]):.2f}" r="4" fill="black"/>')
        lines.append(f'<circle cx="{px(x[-1, j]):.2f}" cy="{py(t[-1]):.2f}" r="4" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
