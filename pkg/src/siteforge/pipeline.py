"""Prompt-to-layout generation: coarse model plan, preconstraints, solve.

The five-step flow: fill missing prompt labels, sample a coarse category
grid from the tile model, translate categories to allowed detailed tiles,
run the constraint solver once, and evaluate features and per-attribute
fidelity against the persisted label schema.  Also supports erasing a
rectangular region and regenerating it under a new prompt while preserving
everything outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model as tile_lm
from . import wfc
from .catalog import AdjacencyRules, Category, TileCatalog
from .dataset import LEVELS, LabelSchema
from .features import FEATURE_NAMES, FeatureConfig, FeatureVector, evaluate
from .seeds import Rng, derive


@dataclass(frozen=True)
class Region:
    row: int
    col: int
    height: int
    width: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0 or self.height < 0 or self.width < 0:
            raise ValueError("region fields must be non-negative")

    @property
    def empty(self) -> bool:
        return self.height == 0 or self.width == 0

    def contains(self, r: int, c: int) -> bool:
        return self.row <= r < self.row + self.height and self.col <= c < self.col + self.width

    def check_bounds(self, h: int, w: int) -> None:
        if self.empty:
            return
        if not (
            0 <= self.row
            and 0 <= self.col
            and self.row + self.height <= h
            and self.col + self.width <= w
        ):
            raise ValueError(f"region {self} out of bounds for {h}x{w}")


@dataclass
class GenerationRequest:
    labels: dict[str, str] = field(default_factory=dict)  # partial; rest randomized
    seed: int = 0
    temperature: float = 1.0
    top_k: int = 7
    base_layout: np.ndarray | None = None
    erase_region: Region | None = None


@dataclass
class GenerationResult:
    labels: tuple[str, ...]
    coarse: np.ndarray  # (h, w) category indices
    detailed: np.ndarray | None  # (h, w) tile ids when valid
    features: FeatureVector | None
    validity: bool
    fidelity: dict[str, bool] | None
    relaxations: int
    early_end: bool
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "labels": list(self.labels),
            "coarse": ["".join(str(int(c)) for c in row) for row in self.coarse],
            "detailed": None
            if self.detailed is None
            else {
                "h": int(self.detailed.shape[0]),
                "w": int(self.detailed.shape[1]),
                "tiles": [[int(t) for t in row] for row in self.detailed],
            },
            "features": None if self.features is None else self.features.to_dict(),
            "validity": self.validity,
            "fidelity": self.fidelity,
            "relaxations": self.relaxations,
            "early_end": self.early_end,
            "seed": int(self.seed),
        }


@dataclass(frozen=True)
class GenerationContext:
    """Shared read-only state for serving generation requests."""

    catalog: TileCatalog
    rules: AdjacencyRules
    schema: LabelSchema
    checkpoint: tile_lm.Checkpoint
    h: int
    w: int
    feature_config: FeatureConfig = FeatureConfig()

    def verify_hashes(self) -> None:
        if self.checkpoint.catalog_hash != self.catalog.content_hash():
            raise RuntimeError("checkpoint was trained against a different catalog")
        if self.checkpoint.schema_hash != self.schema.content_hash():
            raise RuntimeError("checkpoint was trained against a different label schema")


def resolve_labels(partial: dict[str, str], rng: Rng) -> tuple[str, ...]:
    """Fill unspecified features with randomly drawn levels."""
    out = []
    for name in FEATURE_NAMES:
        lv = partial.get(name)
        if lv is None:
            lv = LEVELS[rng.choice_index(3)]
        elif lv not in LEVELS:
            raise ValueError(f"bad level {lv!r} for {name}")
        out.append(lv)
    return tuple(out)


def coarse_to_preconstraints(
    coarse: np.ndarray, catalog: TileCatalog
) -> tuple[dict[tuple[int, int], frozenset[int]], int]:
    """Per-cell allowed tile sets for a coarse category grid.

    Interior cells allow every detailed tile of the cell's category; border
    cells are additionally intersected with the site border convention.
    Empty border intersections relax to the full border set, and the number
    of such relaxations is reported.
    """
    h, w = coarse.shape
    border = catalog.border_tiles()
    pre: dict[tuple[int, int], frozenset[int]] = {}
    relaxations = 0
    for r in range(h):
        for c in range(w):
            allowed = catalog.tiles_for_category(Category(int(coarse[r, c])))
            if r in (0, h - 1) or c in (0, w - 1):
                inter = allowed & border
                if not inter:
                    relaxations += 1
                    inter = border
                allowed = inter
            pre[(r, c)] = allowed
    return pre, relaxations


def _finish(
    ctx: GenerationContext,
    labels: tuple[str, ...],
    coarse: np.ndarray,
    early_end: bool,
    seed: int,
    extra_pre: dict[tuple[int, int], frozenset[int]] | None = None,
) -> GenerationResult:
    pre, relaxations = coarse_to_preconstraints(coarse, ctx.catalog)
    if extra_pre:
        pre.update(extra_pre)
    outcome = wfc.solve(
        ctx.h,
        ctx.w,
        ctx.rules,
        ctx.rules.weights,
        pre,
        derive(seed, "solve"),
    )
    if outcome.status != wfc.COMPLETE:
        return GenerationResult(
            labels, coarse, None, None, False, None, relaxations, early_end, seed
        )
    fv, _ = evaluate(outcome.layout, ctx.catalog, ctx.feature_config)
    actual = ctx.schema.bin_features(fv)
    fidelity = {
        name: actual[i] == labels[i] for i, name in enumerate(FEATURE_NAMES)
    }
    return GenerationResult(
        labels, coarse, outcome.layout, fv, True, fidelity, relaxations, early_end, seed
    )


def generate(req: GenerationRequest, ctx: GenerationContext) -> GenerationResult:
    """Sample a coarse plan and refine it with a single solver attempt."""
    ctx.verify_hashes()
    labels = resolve_labels(req.labels, Rng(derive(req.seed, "labels")))
    res = tile_lm.sample(
        ctx.checkpoint.model,
        labels,
        ctx.h,
        ctx.w,
        derive(req.seed, "lm"),
        req.temperature,
        req.top_k,
    )
    return _finish(ctx, labels, res.categories, res.early_end, req.seed)


def regenerate_region(req: GenerationRequest, ctx: GenerationContext) -> GenerationResult:
    """Resample a rectangular region under a new prompt, keeping the rest.

    Outside the region, the coarse tokens are forced to the base layout's
    categories and the detailed cells are pinned to their existing tiles, so
    a valid result preserves them byte-for-byte.
    """
    ctx.verify_hashes()
    if req.base_layout is None or req.erase_region is None:
        raise ValueError("regenerate_region needs base_layout and erase_region")
    base = np.asarray(req.base_layout, dtype=np.int32)
    if base.shape != (ctx.h, ctx.w):
        raise ValueError(f"base layout must be {ctx.h}x{ctx.w}")
    region = req.erase_region
    region.check_bounds(ctx.h, ctx.w)
    base_cats = ctx.catalog.categories[base].astype(np.int8)

    labels = resolve_labels(req.labels, Rng(derive(req.seed, "labels")))
    if region.empty:
        fv, _ = evaluate(base, ctx.catalog, ctx.feature_config)
        actual = ctx.schema.bin_features(fv)
        fidelity = {name: actual[i] == labels[i] for i, name in enumerate(FEATURE_NAMES)}
        return GenerationResult(
            labels, base_cats, base.copy(), fv, True, fidelity, 0, False, req.seed
        )

    forced = np.full(ctx.h * ctx.w, -1, dtype=np.int64)
    for r in range(ctx.h):
        for c in range(ctx.w):
            if not region.contains(r, c):
                forced[r * ctx.w + c] = int(base_cats[r, c])
    res = tile_lm.sample(
        ctx.checkpoint.model,
        labels,
        ctx.h,
        ctx.w,
        derive(req.seed, "lm"),
        req.temperature,
        req.top_k,
        forced=forced,
    )
    pins: dict[tuple[int, int], frozenset[int]] = {}
    for r in range(ctx.h):
        for c in range(ctx.w):
            if not region.contains(r, c):
                pins[(r, c)] = frozenset([int(base[r, c])])
    return _finish(ctx, labels, res.categories, res.early_end, req.seed, extra_pre=pins)
