"""Self-contained SVG rendering for layer-span matrices (no plotting deps)."""

from __future__ import annotations

import math

import numpy as np

from .errors import NncompError

CELL = 44
MARGIN_LEFT = 60
MARGIN_TOP = 48
MARGIN_BOTTOM = 34
MARGIN_RIGHT = 16

_NEGATIVE = (33, 102, 172)  # blue
_POSITIVE = (178, 24, 43)  # red


def _blend(base: tuple[int, int, int], t: float) -> str:
    r, g, b = (round(255 + (c - 255) * t) for c in base)
    return f"#{r:02x}{g:02x}{b:02x}"


def _cell_color(value: float, vmax: float) -> str:
    if vmax == 0.0:
        return "#ffffff"
    t = min(1.0, abs(value) / vmax)
    return _blend(_NEGATIVE if value < 0 else _POSITIVE, t)


def render_heatmap(
    matrix: np.ndarray,
    title: str = "",
    x_label: str = "start layer",
    y_label: str = "end layer",
    comment: str | None = None,
) -> str:
    """Lower-triangular heatmap: columns = start layer, rows = end layer.

    Uses a diverging color scale centered at zero; NaN cells stay blank.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise NncompError(f"cannot render empty or non-2d matrix with shape {matrix.shape}")
    n_rows, n_cols = matrix.shape
    finite = matrix[np.isfinite(matrix)]
    vmax = float(np.abs(finite).max()) if finite.size else 0.0

    width = MARGIN_LEFT + n_cols * CELL + MARGIN_RIGHT
    height = MARGIN_TOP + n_rows * CELL + MARGIN_BOTTOM
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if comment:
        parts.append(f"<!-- {comment} -->")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        parts.append(
            f'<text x="{width / 2:g}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )

    for row in range(n_rows):
        y = MARGIN_TOP + row * CELL
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{y + CELL / 2 + 4:g}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{row}</text>'
        )
        for col in range(n_cols):
            value = matrix[row, col]
            if not math.isfinite(value):
                continue
            x = MARGIN_LEFT + col * CELL
            parts.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{_cell_color(value, vmax)}" stroke="#999" stroke-width="0.5"/>'
            )
            parts.append(
                f'<text x="{x + CELL / 2:g}" y="{y + CELL / 2 + 4:g}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{value:.3f}</text>'
            )

    for col in range(n_cols):
        x = MARGIN_LEFT + col * CELL
        parts.append(
            f'<text x="{x + CELL / 2:g}" y="{MARGIN_TOP + n_rows * CELL + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{col}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_LEFT + n_cols * CELL / 2:g}" y="{height - 6}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="14" y="{MARGIN_TOP + n_rows * CELL / 2:g}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {MARGIN_TOP + n_rows * CELL / 2:g})">{y_label}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
