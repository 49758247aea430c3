"""Variation line charts emitted as plain SVG strings.

No plotting dependency: charts are assembled from a handful of SVG
primitives with fixed viewBoxes and deterministic coordinate formatting,
so outputs are diff-able and usable as golden files. Each groove is drawn
as exactly one polyline (x = measure index, y = variation), with a tick
at every measure.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

_FONT = 'font-family="monospace"'
_AXIS_COLOR = "#444444"
_GRID_COLOR = "#dddddd"
_LINE_COLOR = "#1f6fb2"


def _fmt(value: float) -> str:
    return f"{value:.1f}"


def _y_ceiling(values: Sequence[float]) -> float:
    peak = max((v for v in values), default=0.0)
    if peak <= 0:
        return 5.0
    step = 5.0
    ceiling = step
    while ceiling < peak:
        ceiling += step
    return ceiling


def _polyline_points(
    values: Sequence[float],
    x0: float,
    y0: float,
    plot_w: float,
    plot_h: float,
    y_max: float,
) -> str:
    span = max(len(values) - 1, 1)
    points = []
    for i, v in enumerate(values):
        x = x0 + plot_w * (i / span)
        y = y0 + plot_h * (1.0 - v / y_max)
        points.append(f"{_fmt(x)},{_fmt(y)}")
    return " ".join(points)


def variation_chart(
    values: Sequence[float],
    *,
    title: str = "",
    width: int = 640,
    height: int = 320,
) -> str:
    """A standalone chart of one groove's per-measure variation."""
    left, right, top, bottom = 48.0, 16.0, 30.0, 36.0
    plot_w = width - left - right
    plot_h = height - top - bottom
    y_max = _y_ceiling(values)
    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="18" text-anchor="middle" '
            f'{_FONT} font-size="13">{escape(title)}</text>'
        )
    # Axes.
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" '
        f'y2="{_fmt(top + plot_h)}" stroke="{_AXIS_COLOR}" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_fmt(left)}" y1="{_fmt(top + plot_h)}" x2="{_fmt(left + plot_w)}" '
        f'y2="{_fmt(top + plot_h)}" stroke="{_AXIS_COLOR}" stroke-width="1"/>'
    )
    # Horizontal gridlines and y labels at five even divisions.
    for i in range(6):
        frac = i / 5
        y = top + plot_h * (1.0 - frac)
        label = y_max * frac
        if i:
            parts.append(
                f'<line x1="{_fmt(left)}" y1="{_fmt(y)}" x2="{_fmt(left + plot_w)}" '
                f'y2="{_fmt(y)}" stroke="{_GRID_COLOR}" stroke-width="1"/>'
            )
        parts.append(
            f'<text x="{_fmt(left - 6)}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'{_FONT} font-size="10">{label:g}</text>'
        )
    # A tick and label at every measure index.
    span = max(len(values) - 1, 1)
    for i in range(len(values)):
        x = left + plot_w * (i / span)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(top + plot_h)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(top + plot_h + 4)}" stroke="{_AXIS_COLOR}" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(top + plot_h + 16)}" text-anchor="middle" '
            f'{_FONT} font-size="10">{i}</text>'
        )
    if values:
        points = _polyline_points(values, left, top, plot_w, plot_h, y_max)
        parts.append(
            f'<polyline fill="none" stroke="{_LINE_COLOR}" stroke-width="1.5" '
            f'points="{points}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def faceted_variation_chart(
    series: Sequence[tuple[str, Sequence[float]]],
    *,
    columns: int = 4,
    cell_width: int = 220,
    cell_height: int = 140,
    title: str = "",
) -> str:
    """A grid of small variation charts, one facet (and polyline) per groove."""
    columns = max(columns, 1)
    rows = (len(series) + columns - 1) // columns if series else 1
    header = 26 if title else 0
    width = columns * cell_width
    height = rows * cell_height + header
    pad_left, pad_right, pad_top, pad_bottom = 30.0, 8.0, 20.0, 18.0
    plot_w = cell_width - pad_left - pad_right
    plot_h = cell_height - pad_top - pad_bottom
    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="17" text-anchor="middle" '
            f'{_FONT} font-size="13">{escape(title)}</text>'
        )
    for index, (name, values) in enumerate(series):
        col, row = index % columns, index // columns
        ox = col * cell_width
        oy = row * cell_height + header
        y_max = _y_ceiling(values)
        parts.append(f'<g transform="translate({ox},{oy})">')
        parts.append(
            f'<text x="{_fmt(cell_width / 2)}" y="12" text-anchor="middle" '
            f'{_FONT} font-size="9">{escape(name)}</text>'
        )
        parts.append(
            f'<line x1="{_fmt(pad_left)}" y1="{_fmt(pad_top)}" x2="{_fmt(pad_left)}" '
            f'y2="{_fmt(pad_top + plot_h)}" stroke="{_AXIS_COLOR}" stroke-width="0.8"/>'
        )
        parts.append(
            f'<line x1="{_fmt(pad_left)}" y1="{_fmt(pad_top + plot_h)}" '
            f'x2="{_fmt(pad_left + plot_w)}" y2="{_fmt(pad_top + plot_h)}" '
            f'stroke="{_AXIS_COLOR}" stroke-width="0.8"/>'
        )
        parts.append(
            f'<text x="{_fmt(pad_left - 4)}" y="{_fmt(pad_top + 4)}" text-anchor="end" '
            f'{_FONT} font-size="8">{y_max:g}</text>'
        )
        parts.append(
            f'<text x="{_fmt(pad_left - 4)}" y="{_fmt(pad_top + plot_h + 3)}" '
            f'text-anchor="end" {_FONT} font-size="8">0</text>'
        )
        if values:
            points = _polyline_points(values, pad_left, pad_top, plot_w, plot_h, y_max)
            parts.append(
                f'<polyline fill="none" stroke="{_LINE_COLOR}" stroke-width="1" '
                f'points="{points}"/>'
            )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
