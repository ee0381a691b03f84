"""Constraint solver over tile grids: collapse lowest-entropy cells, propagate.

The wave holds a boolean candidate matrix per cell.  Collapse picks the
uncollapsed cell with minimum Shannon entropy of its weighted candidates,
assigns one state by weighted draw, and worklist-propagates removals to a
fix-point.  Contradictions are returned as data, never raised.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .catalog import DCOL, DIRECTIONS, DROW, OPPOSITE, AdjacencyRules
from .seeds import Rng

COMPLETE = "Complete"
CONTRADICTION = "Contradiction"


@dataclass
class SolveOutcome:
    status: str
    layout: np.ndarray | None  # (H, W) tile ids when Complete
    collapse_count: int
    contradiction_cell: tuple[int, int] | None = None

    def serialize(self) -> str:
        lines = [f"status {self.status} collapses {self.collapse_count}"]
        if self.layout is not None:
            h, w = self.layout.shape
            lines.append(f"{h} {w}")
            for row in self.layout:
                lines.append(" ".join(str(int(t)) for t in row))
        return "\n".join(lines) + "\n"


def serialize_layout(grid: np.ndarray) -> str:
    h, w = grid.shape
    lines = [f"{h} {w}"]
    for row in grid:
        lines.append(" ".join(str(int(t)) for t in row))
    return "\n".join(lines) + "\n"


def parse_layout(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    h, w = (int(x) for x in lines[0].split())
    grid = np.array([[int(t) for t in ln.split()] for ln in lines[1 : 1 + h]], dtype=np.int32)
    if grid.shape != (h, w):
        raise ValueError(f"layout header says {h}x{w}, body is {grid.shape}")
    return grid


def entropy(candidates: np.ndarray, weights: np.ndarray) -> float:
    """Shannon entropy of a cell: log(sum w) - sum(w log w)/sum(w), natural log.

    ``candidates`` is a boolean mask over the catalog; raises on collapsed
    (single-candidate) cells being fine, but a zero-candidate cell is a
    domain error, as is calling with any non-positive candidate weight.
    """
    w = weights[candidates]
    if w.size == 0:
        raise ValueError("entropy of empty candidate set")
    if np.any(w <= 0):
        raise ValueError("entropy requires positive weights")
    total = float(np.sum(w))
    return float(np.log(total) - float(np.sum(w * np.log(w))) / total)


class Contradiction(Exception):
    """Internal signal; converted to a SolveOutcome by the public API."""

    def __init__(self, cell: tuple[int, int]):
        self.cell = cell


class Wave:
    """Mutable solver state for one run.  Single-owner; rules are shared."""

    def __init__(
        self,
        h: int,
        w: int,
        rules: AdjacencyRules,
        weights: np.ndarray,
        preconstraints: dict[tuple[int, int], frozenset[int]] | None = None,
        seed: int = 0,
    ):
        if h < 2 or w < 2:
            raise ValueError("grid must be at least 2x2")
        self.h, self.w = h, w
        self.rules = rules
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (rules.n_tiles,):
            raise ValueError("weights length must match tile count")
        self.rng = Rng(seed)
        self.cand = np.ones((h, w, rules.n_tiles), dtype=bool)
        self.contradiction: tuple[int, int] | None = None
        self.collapse_count = 0

        seeds_cells = []
        for (r, c), allowed in (preconstraints or {}).items():
            if not (0 <= r < h and 0 <= c < w):
                raise ValueError(f"preconstraint out of bounds at {(r, c)}")
            if not allowed:
                raise ValueError(f"empty preconstraint set at {(r, c)}")
            mask = np.zeros(rules.n_tiles, dtype=bool)
            mask[list(allowed)] = True
            if not np.any(self.weights[mask] > 0):
                raise ValueError(f"no positively weighted tile in preconstraint at {(r, c)}")
            self.cand[r, c] = mask
            seeds_cells.append((r, c))
        try:
            self._propagate_from(seeds_cells)
        except Contradiction as e:
            self.contradiction = e.cell

    # -- propagation ---------------------------------------------------

    def _propagate_from(self, cells: list[tuple[int, int]]) -> None:
        queue = deque(cells)
        queued = set(cells)
        allowed = self.rules.allowed
        while queue:
            r, c = queue.popleft()
            queued.discard((r, c))
            here = self.cand[r, c]
            for d in DIRECTIONS:
                nr, nc = r + DROW[d], c + DCOL[d]
                if not (0 <= nr < self.h and 0 <= nc < self.w):
                    continue
                support = allowed[d][here].any(axis=0)
                neigh = self.cand[nr, nc]
                new = neigh & support
                if new.sum() != neigh.sum():
                    if not new.any():
                        raise Contradiction((nr, nc))
                    self.cand[nr, nc] = new
                    if (nr, nc) not in queued:
                        queue.append((nr, nc))
                        queued.add((nr, nc))

    def propagate(self, origin: tuple[int, int]) -> tuple[int, int] | None:
        """Worklist propagation from a just-reduced cell.

        Returns None on success or the first emptied cell on contradiction.
        """
        try:
            self._propagate_from([origin])
        except Contradiction as e:
            self.contradiction = e.cell
            return e.cell
        return None

    # -- collapse ------------------------------------------------------

    def counts(self) -> np.ndarray:
        return self.cand.sum(axis=2)

    def is_fully_collapsed(self) -> bool:
        return bool((self.counts() == 1).all())

    def entropies(self) -> np.ndarray:
        """Entropy per cell; collapsed cells get +inf so argmin skips them."""
        flat = self.cand.reshape(-1, self.rules.n_tiles)
        w = self.weights
        totals = flat @ w
        wlogw = flat @ (w * np.log(w))
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.log(totals) - wlogw / totals
        ent = ent.reshape(self.h, self.w)
        ent[self.counts() <= 1] = np.inf
        return ent

    def collapse_step(self) -> bool:
        """Collapse one minimum-entropy cell.  Returns False when done.

        Ties on the minimum entropy are broken uniformly at random; the
        state is drawn proportionally to candidate weights.  Both draws use
        the wave's seeded generator.
        """
        ent = self.entropies()
        m = ent.min()
        if not np.isfinite(m):
            return False
        ties = np.flatnonzero(ent.reshape(-1) == m)
        pick = ties[self.rng.choice_index(len(ties))]
        r, c = divmod(int(pick), self.w)
        mask = self.cand[r, c]
        ids = np.flatnonzero(mask)
        k = ids[self.rng.weighted_index(self.weights[ids])]
        newmask = np.zeros_like(mask)
        newmask[k] = True
        self.cand[r, c] = newmask
        self.collapse_count += 1
        self.propagate((r, c))
        return True

    def layout(self) -> np.ndarray:
        grid = np.argmax(self.cand, axis=2).astype(np.int32)
        return grid

    def run(self) -> SolveOutcome:
        """Alternate collapse and propagation until complete or contradictory."""
        if self.contradiction is not None:
            return SolveOutcome(CONTRADICTION, None, self.collapse_count, self.contradiction)
        while True:
            if self.contradiction is not None:
                return SolveOutcome(
                    CONTRADICTION, None, self.collapse_count, self.contradiction
                )
            if not self.collapse_step():
                break
        if self.contradiction is not None:
            return SolveOutcome(CONTRADICTION, None, self.collapse_count, self.contradiction)
        return SolveOutcome(COMPLETE, self.layout(), self.collapse_count)


def solve(
    h: int,
    w: int,
    rules: AdjacencyRules,
    weights: np.ndarray,
    preconstraints: dict[tuple[int, int], frozenset[int]] | None = None,
    seed: int = 0,
) -> SolveOutcome:
    """Initialize a wave and run it to completion or contradiction."""
    return Wave(h, w, rules, weights, preconstraints, seed).run()


def border_preconstraints(
    h: int, w: int, allowed: frozenset[int]
) -> dict[tuple[int, int], frozenset[int]]:
    """Constrain the outer ring of the grid to the given tile set."""
    pre: dict[tuple[int, int], frozenset[int]] = {}
    for c in range(w):
        pre[(0, c)] = allowed
        pre[(h - 1, c)] = allowed
    for r in range(h):
        pre[(r, 0)] = allowed
        pre[(r, w - 1)] = allowed
    return pre
