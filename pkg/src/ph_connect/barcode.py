"""Static SVG barcodes for persistence diagrams.

One horizontal bar per (birth, death) pair over an x-range of [0, cap];
infinite bars run to the right edge and end in an arrowhead. Dimensions
are stacked top to bottom and labeled H0/H1/H2. The markup is assembled
by hand so identical inputs give byte-identical documents.
"""
from __future__ import annotations

import math

from .diagrams import PersistenceDiagram
from .errors import ValidationError

PLOT_WIDTH = 640.0
MARGIN_LEFT = 56.0
MARGIN_RIGHT = 36.0
BAR_HEIGHT = 4.0
BAR_GAP = 3.0
PANEL_PAD = 34.0
AXIS_PAD = 22.0
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_barcode_svg(diagrams, cap: float, title: str = "") -> str:
    """Render stacked barcodes; cap must cover every finite death."""
    diagrams = list(diagrams)
    finite_deaths = [d for dg in diagrams for _, d in dg.pairs if math.isfinite(d)]
    if finite_deaths and cap < max(finite_deaths):
        raise ValidationError(
            f"cap {cap} is below the largest finite death {max(finite_deaths)}"
        )
    if not cap > 0:
        raise ValidationError(f"cap must be positive, got {cap}")

    def x_of(value: float) -> float:
        return MARGIN_LEFT + PLOT_WIDTH * min(value, cap) / cap

    parts = []
    y = 18.0
    if title:
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT)}" y="{_fmt(y)}" '
            f'font-family="sans-serif" font-size="13">{title}</text>'
        )
        y += 14.0
    body = []
    for dgm in diagrams:
        color = COLORS[dgm.dimension % len(COLORS)]
        y += PANEL_PAD
        body.append(
            f'<text x="8" y="{_fmt(y - 10)}" font-family="sans-serif" '
            f'font-size="12">H{dgm.dimension}</text>'
        )
        for b, d in dgm.pairs:
            x0 = x_of(b)
            if math.isinf(d):
                x1 = MARGIN_LEFT + PLOT_WIDTH
                marker = ' marker-end="url(#arrow)"'
            else:
                x1 = x_of(d)
                marker = ""
            body.append(
                f'<line x1="{_fmt(x0)}" y1="{_fmt(y)}" x2="{_fmt(x1)}" '
                f'y2="{_fmt(y)}" stroke="{color}" '
                f'stroke-width="{_fmt(BAR_HEIGHT)}"{marker}/>'
            )
            y += BAR_HEIGHT + BAR_GAP
        # axis under the panel with ticks at 0, cap/2, cap
        y += 6.0
        x_end = MARGIN_LEFT + PLOT_WIDTH
        body.append(
            f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(y)}" x2="{_fmt(x_end)}" '
            f'y2="{_fmt(y)}" stroke="#333" stroke-width="1"/>'
        )
        for frac in (0.0, 0.5, 1.0):
            tx = MARGIN_LEFT + PLOT_WIDTH * frac
            body.append(
                f'<line x1="{_fmt(tx)}" y1="{_fmt(y)}" x2="{_fmt(tx)}" '
                f'y2="{_fmt(y + 4)}" stroke="#333" stroke-width="1"/>'
            )
            body.append(
                f'<text x="{_fmt(tx)}" y="{_fmt(y + 15)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">'
                f'{_fmt(cap * frac)}</text>'
            )
        y += AXIS_PAD
    height = y + 12.0
    width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
        '<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="6" '
        'refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#333"/>'
        "</marker></defs>\n"
    )
    return head + "\n".join(parts + body) + "\n</svg>\n"


def save_barcode_svg(diagrams, cap: float, path, title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_barcode_svg(diagrams, cap, title=title))
