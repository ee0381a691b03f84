"""Site metrics computed on detailed layouts.

Five features (parks, largest park, units, sequestered carbon, privacy) plus
the scalar performance measure (non-empty proportion).  All definitions are
local and deterministic; constants live in ``FeatureConfig`` and are embedded
in dataset metadata so labels stay interpretable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .catalog import E, N, OPPOSITE, S, W, Category, TileCatalog

FEATURE_NAMES = ("num_parks", "largest_park", "total_units", "carbon", "privacy")


@dataclass(frozen=True)
class FeatureConfig:
    park_min_size: int = 4
    carbon_tree: float = 10.0
    carbon_lawn: float = 1.0
    privacy_dmax: int = 6

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(**d)


@dataclass(frozen=True)
class FeatureVector:
    num_parks: int
    largest_park: int
    total_units: int
    carbon: float
    privacy: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.num_parks, self.largest_park, self.total_units, self.carbon, self.privacy],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        return {
            "num_parks": int(self.num_parks),
            "largest_park": int(self.largest_park),
            "total_units": int(self.total_units),
            "carbon": float(self.carbon),
            "privacy": float(self.privacy),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVector":
        return cls(
            int(d["num_parks"]),
            int(d["largest_park"]),
            int(d["total_units"]),
            float(d["carbon"]),
            float(d["privacy"]),
        )


def parks(grid: np.ndarray, catalog: TileCatalog, min_size: int = 4) -> tuple[int, int]:
    """Count 4-connected landscaping components of at least ``min_size`` tiles.

    Returns (number of parks, size of the largest); (0, 0) when none.
    """
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    cats = catalog.categories[grid]
    green = (cats == Category.TREE) | (cats == Category.LAWN)
    labels, n = ndimage.label(green)
    if n == 0:
        return 0, 0
    sizes = np.bincount(labels.reshape(-1))[1:]
    big = sizes[sizes >= min_size]
    if big.size == 0:
        return 0, 0
    return int(big.size), int(big.max())


def _unit_labels(grid: np.ndarray, catalog: TileCatalog) -> tuple[np.ndarray, int]:
    """Label livable cells into units by BFS.

    Connectivity is 4-adjacency between livable cells, except across an edge
    where either side carries its unit-divider wall on that shared edge.
    """
    h, w = grid.shape
    cats = catalog.categories[grid]
    livable = cats == Category.LIVABLE

    def connected(r, c, nr, nc, d) -> bool:
        # d is the direction from (r,c) to (nr,nc)
        if catalog.divider_direction(int(grid[r, c])) == d:
            return False
        if catalog.divider_direction(int(grid[nr, nc])) == OPPOSITE[d]:
            return False
        return True

    labels = np.zeros((h, w), dtype=np.int32)
    nxt = 0
    for r0 in range(h):
        for c0 in range(w):
            if not livable[r0, c0] or labels[r0, c0]:
                continue
            nxt += 1
            q = deque([(r0, c0)])
            labels[r0, c0] = nxt
            while q:
                r, c = q.popleft()
                for d, (dr, dc) in ((N, (-1, 0)), (E, (0, 1)), (S, (1, 0)), (W, (0, -1))):
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < h and 0 <= nc < w):
                        continue
                    if not livable[nr, nc] or labels[nr, nc]:
                        continue
                    if connected(r, c, nr, nc, d):
                        labels[nr, nc] = nxt
                        q.append((nr, nc))
    return labels, nxt


def total_units(grid: np.ndarray, catalog: TileCatalog) -> int:
    """Number of divider-separated livable components."""
    return _unit_labels(grid, catalog)[1]


def carbon(
    grid: np.ndarray, catalog: TileCatalog, c_tree: float = 10.0, c_lawn: float = 1.0
) -> float:
    if not (c_tree >= c_lawn >= 0):
        raise ValueError("need c_tree >= c_lawn >= 0")
    cats = catalog.categories[grid]
    return float(c_tree * (cats == Category.TREE).sum() + c_lawn * (cats == Category.LAWN).sum())


def privacy(grid: np.ndarray, catalog: TileCatalog, d_max: int = 6) -> float:
    """Mean capped Chebyshev distance from each livable cell to another unit.

    Layouts with at most one unit score the no-neighbor default of 1.0.
    """
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    labels, n_units = _unit_labels(grid, catalog)
    if n_units <= 1:
        return 1.0
    h, w = grid.shape
    cells = np.argwhere(labels > 0)
    # Per unit, a multi-source 8-neighborhood BFS from all other units' cells
    # gives the Chebyshev step distance on the grid.
    dist_total = 0.0
    for unit in range(1, n_units + 1):
        sources = np.argwhere((labels > 0) & (labels != unit))
        dist = np.full((h, w), -1, dtype=np.int32)
        q = deque()
        for r, c in sources:
            dist[r, c] = 0
            q.append((int(r), int(c)))
        while q:
            r, c = q.popleft()
            if dist[r, c] >= d_max:
                continue
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    nr, nc = r + dr, c + dc
                    if 0 <= nr < h and 0 <= nc < w and dist[nr, nc] < 0:
                        dist[nr, nc] = dist[r, c] + 1
                        q.append((nr, nc))
        for r, c in np.argwhere(labels == unit):
            d = dist[r, c]
            dist_total += d_max if d < 0 else min(int(d), d_max)
    return float(dist_total / (len(cells) * d_max))


def performance(grid: np.ndarray, catalog: TileCatalog) -> float:
    """Proportion of non-empty tiles, in [0, 1]."""
    cats = catalog.categories[grid]
    return float((cats != Category.EMPTY).mean())


def evaluate(grid: np.ndarray, catalog: TileCatalog, cfg: FeatureConfig) -> tuple[FeatureVector, float]:
    np_, lp = parks(grid, catalog, cfg.park_min_size)
    tu = total_units(grid, catalog)
    cb = carbon(grid, catalog, cfg.carbon_tree, cfg.carbon_lawn)
    pv = privacy(grid, catalog, cfg.privacy_dmax)
    return FeatureVector(np_, lp, tu, cb, pv), performance(grid, catalog)
