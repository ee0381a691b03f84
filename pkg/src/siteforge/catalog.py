"""Tile catalog: detailed tile states, adjacency extraction, category mapping.

The shipped catalog covers 7 functional categories with 41 detailed states
(orientations, reflections, and variants), mirroring real prefab module
catalogs at an auditable size.  Adjacency rules are not hard-coded: they are
extracted from the example designs shipped under ``siteforge/designs/``, as
observed neighbor pairs plus per-tile frequency weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np


class Category(IntEnum):
    LIVABLE = 0
    CORRIDOR = 1
    CORE = 2
    TREE = 3
    LAWN = 4
    STREET = 5
    EMPTY = 6


#: One character per category, in declaration order; used for tokenization.
CATEGORY_CHARS = "ABCDEFG"

#: Color hints for rendering/export (hex RGB per category).
CATEGORY_COLORS = {
    Category.LIVABLE: "#c98f4a",
    Category.CORRIDOR: "#8a6db1",
    Category.CORE: "#b0413e",
    Category.TREE: "#2d6a4f",
    Category.LAWN: "#74c69d",
    Category.STREET: "#9a9a9a",
    Category.EMPTY: "#efefe7",
}

# Directions: N, E, S, W.  OPPOSITE[d] is the reverse direction.
N, E, S, W = 0, 1, 2, 3
DIRECTIONS = (N, E, S, W)
OPPOSITE = (S, W, N, E)
DROW = (-1, 0, 1, 0)
DCOL = (0, 1, 0, -1)

# Tile variants within a category.
VAR_MID = 0
VAR_DIVIDER = 1
VAR_CAP = 2
VAR_DETACHED = 3  # single-cell structures: huts, kiosks, corridor ends
VAR_STRAIGHT = 0
VAR_BEND = 1
VAR_TEE = 2
VAR_END = 3
VAR_GAZEBO = 4


class CatalogError(ValueError):
    """Bad catalog or example-design input."""


@dataclass(frozen=True)
class TileState:
    """One detailed tile state."""

    id: int
    name: str
    category: Category
    orientation: int  # degrees, one of 0/90/180/270
    reflected: bool
    variant: int

    def key(self) -> tuple:
        return (self.category, self.orientation, self.reflected, self.variant)


def _tile_specs() -> list[tuple[str, Category, int, bool, int]]:
    specs: list[tuple[str, Category, int, bool, int]] = [
        ("empty", Category.EMPTY, 0, False, 0),
        ("street", Category.STREET, 0, False, 0),
        ("plaza", Category.STREET, 0, False, 1),
        ("lawn", Category.LAWN, 0, False, 0),
        ("garden", Category.LAWN, 0, False, 1),
        ("tree", Category.TREE, 0, False, 0),
        ("conifer", Category.TREE, 0, False, 1),
    ]
    for deg in (0, 90, 180, 270):
        for refl in (False, True):
            suffix = f"{deg}r" if refl else f"{deg}"
            specs.append((f"liv_mid_{suffix}", Category.LIVABLE, deg, refl, VAR_MID))
    for deg in (0, 90, 180, 270):
        specs.append((f"liv_div_{deg}", Category.LIVABLE, deg, False, VAR_DIVIDER))
    for deg in (0, 90, 180, 270):
        for refl in (False, True):
            suffix = f"{deg}r" if refl else f"{deg}"
            specs.append((f"liv_cap_{suffix}", Category.LIVABLE, deg, refl, VAR_CAP))
    specs.append(("liv_hut", Category.LIVABLE, 0, False, VAR_DETACHED))
    for deg in (0, 90):
        specs.append((f"cor_str_{deg}", Category.CORRIDOR, deg, False, VAR_STRAIGHT))
    for deg in (0, 90, 180, 270):
        specs.append((f"cor_bend_{deg}", Category.CORRIDOR, deg, False, VAR_BEND))
    for deg in (0, 90, 180, 270):
        specs.append((f"cor_tee_{deg}", Category.CORRIDOR, deg, False, VAR_TEE))
    for deg in (0, 90, 180, 270):
        specs.append((f"cor_end_{deg}", Category.CORRIDOR, deg, False, VAR_END))
    specs.append(("cor_gazebo", Category.CORRIDOR, 0, False, VAR_GAZEBO))
    for deg in (0, 90, 180, 270):
        specs.append((f"core_{deg}", Category.CORE, deg, False, 0))
    specs.append(("core_kiosk", Category.CORE, 0, False, 1))
    return specs


class TileCatalog:
    """Immutable collection of tile states with category lookups."""

    def __init__(self, tiles: list[TileState]):
        self.tiles: tuple[TileState, ...] = tuple(tiles)
        self.n = len(self.tiles)
        self.by_name = {t.name: t for t in self.tiles}
        keys = {t.key() for t in self.tiles}
        if len(keys) != self.n:
            raise CatalogError("duplicate (category, orientation, reflected, variant) tuple")
        if {t.id for t in self.tiles} != set(range(self.n)):
            raise CatalogError("tile ids must be 0..n-1")
        self.categories = np.array([t.category for t in self.tiles], dtype=np.int8)
        self._by_category = {
            cat: frozenset(t.id for t in self.tiles if t.category == cat) for cat in Category
        }
        for cat in Category:
            if not self._by_category[cat]:
                raise CatalogError(f"category {cat.name} has no tiles")

    def category_of(self, tile_id: int) -> Category:
        if not 0 <= tile_id < self.n:
            raise KeyError(f"unknown tile id {tile_id}")
        return Category(self.categories[tile_id])

    def tiles_for_category(self, cat: Category) -> frozenset[int]:
        return self._by_category[Category(cat)]

    def divider_direction(self, tile_id: int) -> int | None:
        """Direction of the unit-divider wall carried by this tile, if any.

        Orientation encodes the divider edge: 0=W, 90=N, 180=E, 270=S.
        """
        t = self.tiles[tile_id]
        if t.category != Category.LIVABLE or t.variant != VAR_DIVIDER:
            return None
        return {0: W, 90: N, 180: E, 270: S}[t.orientation]

    def border_tiles(self) -> frozenset[int]:
        """Tiles admissible on the site border: street or landscaping."""
        return (
            self._by_category[Category.STREET]
            | self._by_category[Category.LAWN]
            | self._by_category[Category.TREE]
        )

    def content_hash(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for t in self.tiles:
            h.update(
                f"{t.id}:{t.name}:{t.category}:{t.orientation}:{int(t.reflected)}:{t.variant};".encode()
            )
        return h.hexdigest()

    def __len__(self) -> int:
        return self.n


def build_catalog() -> TileCatalog:
    """Construct the shipped 41-state catalog."""
    return TileCatalog(
        [
            TileState(i, name, cat, deg, refl, var)
            for i, (name, cat, deg, refl, var) in enumerate(_tile_specs())
        ]
    )


@dataclass
class ExampleDesign:
    """A reference layout that adjacency rules are learned from."""

    name: str
    grid: np.ndarray  # (H, W) int tile ids

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.int32)
        if self.grid.ndim != 2 or self.grid.size == 0:
            raise CatalogError(f"design {self.name!r}: grid must be 2-D and non-empty")


DESIGN_FORMAT_TAG = "sitedesign v1"
CATALOG_FORMAT_TAG = "sitecatalog v1"


def parse_design(text: str, name: str, catalog: TileCatalog) -> ExampleDesign:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != DESIGN_FORMAT_TAG:
        raise CatalogError(f"design {name!r}: missing format tag {DESIGN_FORMAT_TAG!r}")
    rows = []
    for ln in lines[1:]:
        ids = []
        for tok in ln.split():
            tile = catalog.by_name.get(tok)
            if tile is None:
                raise CatalogError(f"design {name!r}: unknown tile id {tok!r}")
            ids.append(tile.id)
        rows.append(ids)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CatalogError(f"design {name!r}: ragged rows (widths {sorted(widths)})")
    return ExampleDesign(name, np.array(rows, dtype=np.int32))


def format_design(design: ExampleDesign, catalog: TileCatalog) -> str:
    lines = [DESIGN_FORMAT_TAG]
    for row in design.grid:
        lines.append(" ".join(catalog.tiles[int(t)].name for t in row))
    return "\n".join(lines) + "\n"


def load_design_file(path: str | Path, catalog: TileCatalog) -> ExampleDesign:
    p = Path(path)
    return parse_design(p.read_text(), p.stem, catalog)


def shipped_designs(catalog: TileCatalog) -> list[ExampleDesign]:
    """Load the example designs bundled with the package."""
    root = resources.files("siteforge").joinpath("designs")
    designs = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            designs.append(parse_design(entry.read_text(), entry.name[:-4], catalog))
    if not designs:
        raise CatalogError("no shipped designs found")
    return designs


def write_catalog_file(catalog: TileCatalog, path: str | Path) -> None:
    lines = [CATALOG_FORMAT_TAG]
    for t in catalog.tiles:
        lines.append(
            f"{t.id} {t.name} {t.category.name} {t.orientation} {int(t.reflected)} {t.variant}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_catalog_file(path: str | Path) -> TileCatalog:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != CATALOG_FORMAT_TAG:
        raise CatalogError(f"missing catalog format tag {CATALOG_FORMAT_TAG!r}")
    tiles = []
    for ln in lines[1:]:
        tid, name, cat, deg, refl, var = ln.split()
        tiles.append(
            TileState(int(tid), name, Category[cat], int(deg), bool(int(refl)), int(var))
        )
    return TileCatalog(tiles)


class AdjacencyRules:
    """Observed neighbor pairs per direction, plus frequency weights.

    ``allowed[d][a, b]`` is True when tile ``b`` may sit in direction ``d``
    from tile ``a``.  Symmetric by construction: ``allowed[d][a, b] ==
    allowed[opposite(d)][b, a]``.
    """

    def __init__(self, allowed: np.ndarray, weights: np.ndarray):
        if allowed.shape[0] != 4 or allowed.shape[1] != allowed.shape[2]:
            raise CatalogError("allowed must have shape (4, T, T)")
        if allowed.shape[1] != weights.shape[0]:
            raise CatalogError("weights length must match tile count")
        self.allowed = allowed.astype(bool)
        self.weights = weights.astype(np.float64)
        for d in DIRECTIONS:
            if not np.array_equal(self.allowed[d], self.allowed[OPPOSITE[d]].T):
                raise CatalogError("adjacency symmetry violated")

    @property
    def n_tiles(self) -> int:
        return self.allowed.shape[1]

    def allowed_set(self, tile_id: int, direction: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.allowed[direction][tile_id]).tolist())

    def is_allowed(self, a: int, direction: int, b: int) -> bool:
        return bool(self.allowed[direction][a, b])


def extract_adjacency(catalog: TileCatalog, examples: list[ExampleDesign]) -> AdjacencyRules:
    """Learn adjacency rules and frequency weights from example designs.

    The allowed sets contain exactly the ordered neighbor pairs observed in
    any example; weights are per-tile occurrence counts.
    """
    if not examples:
        raise CatalogError("adjacency extraction needs at least one example design")
    T = catalog.n
    allowed = np.zeros((4, T, T), dtype=bool)
    counts = np.zeros(T, dtype=np.float64)
    for ex in examples:
        g = ex.grid
        if g.min() < 0 or g.max() >= T:
            raise CatalogError(f"design {ex.name!r}: tile id out of catalog range")
        np.add.at(counts, g.reshape(-1), 1.0)
        a, b = g[:, :-1], g[:, 1:]
        allowed[E][a.reshape(-1), b.reshape(-1)] = True
        allowed[W][b.reshape(-1), a.reshape(-1)] = True
        a, b = g[:-1, :], g[1:, :]
        allowed[S][a.reshape(-1), b.reshape(-1)] = True
        allowed[N][b.reshape(-1), a.reshape(-1)] = True

    return AdjacencyRules(allowed, counts)


def closure_violations(
    catalog: TileCatalog, rules: AdjacencyRules
) -> list[tuple[str, int]]:
    """Observed tiles lacking any allowed neighbor in some direction.

    A corpus used for open-boundary solving should return an empty list;
    sparse corpora (single rows, pair snippets) legitimately do not.
    """
    seen = rules.weights > 0
    out = []
    for d in DIRECTIONS:
        for i in np.flatnonzero(seen & ~rules.allowed[d].any(axis=1)):
            out.append((catalog.tiles[int(i)].name, d))
    return out


def shipped_rules(catalog: TileCatalog) -> AdjacencyRules:
    """Adjacency rules extracted from the bundled designs, closure-checked."""
    rules = extract_adjacency(catalog, shipped_designs(catalog))
    bad = closure_violations(catalog, rules)
    if bad:
        raise CatalogError(f"shipped designs leave tiles without neighbors: {bad}")
    return rules


def check_layout(grid: np.ndarray, rules: AdjacencyRules) -> list[tuple[int, int, int]]:
    """Independent adjacency audit of a fully assigned grid.

    Returns a list of violations as (row, col, direction) looking from the
    offending cell; empty list means the layout is legal.  Deliberately a
    plain pairwise scan, separate from the solver's propagation machinery.
    """
    h, w = grid.shape
    bad = []
    for r in range(h):
        for c in range(w):
            t = int(grid[r, c])
            if c + 1 < w and not rules.is_allowed(t, E, int(grid[r, c + 1])):
                bad.append((r, c, E))
            if r + 1 < h and not rules.is_allowed(t, S, int(grid[r + 1, c])):
                bad.append((r, c, S))
    return bad
