"""Color-map export of layouts as SVG grids, for reports and figures."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .catalog import CATEGORY_COLORS, Category, TileCatalog

CELL = 16


def layout_svg(grid: np.ndarray, catalog: TileCatalog) -> str:
    h, w = grid.shape
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * CELL}" height="{h * CELL}" '
        f'viewBox="0 0 {w * CELL} {h * CELL}">'
    ]
    for r in range(h):
        for c in range(w):
            cat = Category(int(catalog.categories[int(grid[r, c])]))
            color = CATEGORY_COLORS[cat]
            parts.append(
                f'<rect x="{c * CELL}" y="{r * CELL}" width="{CELL}" height="{CELL}" '
                f'fill="{color}" stroke="#ffffff" stroke-width="1"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_layout_svg(grid: np.ndarray, catalog: TileCatalog, path: str | Path) -> None:
    Path(path).write_text(layout_svg(grid, catalog))
