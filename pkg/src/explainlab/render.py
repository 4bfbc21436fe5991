"""Deterministic SVG rendering of attribution heatmaps.

Color contract shared with the UI: diverging blue (negative) - white (zero)
- red (positive), scaled symmetrically by the maximum absolute value, one
cell per input element.
"""

from __future__ import annotations

import numpy as np

CELL = 20  # px per cell


def diverging_color(value: float, scale: float) -> str:
    """Blue-white-red diverging color, scaled by max |value|."""
    if scale <= 0:
        return "#ffffff"
    t = min(abs(value) / scale, 1.0)
    c = int(round(255 * (1.0 - t)))
    if value >= 0:
        return f"#ff{c:02x}{c:02x}"
    return f"#{c:02x}{c:02x}ff"


def _as_grid(values: np.ndarray, segments=None) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if segments is not None:
        values = values[np.asarray(segments, dtype=np.int64)]
    if values.ndim == 3:
        values = values.sum(axis=2)
    if values.ndim == 1:
        values = values[None, :]
    return values


def heatmap_svg(values: np.ndarray, segments=None) -> str:
    """Render a value grid (or per-segment values plus a segment map) as SVG."""
    grid = _as_grid(values, segments)
    rows, cols = grid.shape
    scale = float(np.max(np.abs(grid))) if grid.size else 0.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * CELL}" '
        f'height="{rows * CELL}" viewBox="0 0 {cols * CELL} {rows * CELL}">'
    ]
    for i in range(rows):
        for j in range(cols):
            color = diverging_color(float(grid[i, j]), scale)
            parts.append(
                f'<rect x="{j * CELL}" y="{i * CELL}" width="{CELL}" height="{CELL}" '
                f'fill="{color}" stroke="#dddddd" stroke-width="1"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def attribution_svg(amap) -> str:
    """Heatmap for an AttributionMap (expands LIME segment scores)."""
    return heatmap_svg(amap.values, segments=amap.segments)
