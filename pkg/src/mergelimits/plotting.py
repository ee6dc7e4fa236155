"""Deterministic standalone SVG line plots.

Hand-rolled rather than matplotlib so identical input always yields byte
identical output (no embedded timestamps or generated ids).
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import ConfigError, NumericError

_WIDTH, _HEIGHT = 720, 480
_MARGIN = 60
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def plot_svg(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], path) -> None:
    """Write one polyline per (name, xs, ys) series with axes and a legend."""
    if not series:
        raise ConfigError("no series to plot")
    all_x, all_y = [], []
    for name, xs, ys in series:
        if len(xs) != len(ys) or not xs:
            raise ConfigError(f"series {name!r} must have equal, non-zero lengths")
        if any(not math.isfinite(v) for v in list(xs) + list(ys)):
            raise NumericError(f"series {name!r} contains non-finite points")
        all_x.extend(xs)
        all_y.extend(ys)
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(all_y), max(all_y)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = lambda x: _MARGIN + (x - x0) / (x1 - x0) * (_WIDTH - 2 * _MARGIN)
    py = lambda y: _HEIGHT - _MARGIN - (y - y0) / (y1 - y0) * (_HEIGHT - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
    ]
    # Axis extent labels.
    parts.append(
        f'<text x="{_MARGIN}" y="{_HEIGHT - _MARGIN + 20}" font-size="12">{_fmt(x0)}</text>'
    )
    parts.append(
        f'<text x="{_WIDTH - _MARGIN}" y="{_HEIGHT - _MARGIN + 20}" font-size="12" '
        f'text-anchor="end">{_fmt(x1)}</text>'
    )
    parts.append(f'<text x="{_MARGIN - 8}" y="{_HEIGHT - _MARGIN}" font-size="12" '
                 f'text-anchor="end">{_fmt(y0)}</text>')
    parts.append(f'<text x="{_MARGIN - 8}" y="{_MARGIN + 4}" font-size="12" '
                 f'text-anchor="end">{_fmt(y1)}</text>')

    for idx, (name, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(xs, ys))
        if len(xs) == 1:
            parts.append(
                f'<circle cx="{px(xs[0]):.3f}" cy="{py(ys[0]):.3f}" r="4" fill="{color}"/>'
            )
        else:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                         f'stroke-width="1.5"/>')
        ly = _MARGIN + 16 * idx
        parts.append(f'<rect x="{_WIDTH - _MARGIN - 140}" y="{ly}" width="12" height="12" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{_WIDTH - _MARGIN - 122}" y="{ly + 10}" '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    with open(path, "wb") as f:
        f.write("\n".join(parts).encode("utf-8"))
