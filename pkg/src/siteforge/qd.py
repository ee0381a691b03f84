"""Elite-archive search over solver genomes, plus the random-sampling baseline.

A genome is (per-tile weight multipliers, fixed tiles, seed); development
runs the constraint solver with the genome's weights and fixed-tile
preconstraints, retrying with derived seeds on contradiction.  The archive
is a 5-dimensional feature grid keeping the highest-performing layout per
cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import wfc
from .catalog import AdjacencyRules, TileCatalog
from .features import FEATURE_NAMES, FeatureConfig, FeatureVector, evaluate
from .seeds import Rng, derive

W_MIN, W_MAX = 1e-3, 1e3


@dataclass
class Genome:
    tile_weights: np.ndarray  # positive multipliers over the catalog
    fixed_tiles: list[tuple[int, int, int]]  # (tile_id, row, col)
    seed: int

    def __post_init__(self):
        self.tile_weights = np.clip(
            np.asarray(self.tile_weights, dtype=np.float64), W_MIN, W_MAX
        )
        self.fixed_tiles = [(int(t), int(r), int(c)) for t, r, c in self.fixed_tiles]
        if len({(r, c) for _, r, c in self.fixed_tiles}) != len(self.fixed_tiles):
            raise ValueError("fixed tile positions must be distinct")

    def to_dict(self) -> dict:
        return {
            "tile_weights": [float(x) for x in self.tile_weights],
            "fixed_tiles": [list(ft) for ft in self.fixed_tiles],
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Genome":
        return cls(
            np.array(d["tile_weights"], dtype=np.float64),
            [tuple(ft) for ft in d["fixed_tiles"]],
            int(d["seed"]),
        )


@dataclass
class Elite:
    genome: Genome
    layout: np.ndarray
    features: FeatureVector
    performance: float


INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class DevelopContext:
    """Everything develop() needs besides the genome."""

    catalog: TileCatalog
    rules: AdjacencyRules
    h: int
    w: int
    feature_config: FeatureConfig = FeatureConfig()
    restarts: int = 9


def develop(genome: Genome, ctx: DevelopContext) -> np.ndarray | None:
    """Map a genome to a layout; None when every attempt contradicts.

    Weights are base frequency weights times the genome's multipliers.
    Preconstraints are the site border convention plus the genome's fixed
    tiles as singletons.  Contradictions retry with seeds derived from
    (genome seed, attempt number), so the result is a pure function of the
    genome.
    """
    weights = ctx.rules.weights * genome.tile_weights
    pre = wfc.border_preconstraints(ctx.h, ctx.w, ctx.catalog.border_tiles())
    for t, r, c in genome.fixed_tiles:
        if not (0 <= r < ctx.h and 0 <= c < ctx.w):
            raise ValueError(f"fixed tile out of bounds at {(r, c)}")
        single = frozenset([t])
        pre[(r, c)] = single if (r, c) not in pre else (pre[(r, c)] & single or single)
    for attempt in range(ctx.restarts + 1):
        seed = genome.seed if attempt == 0 else derive(genome.seed, "restart", attempt)
        out = wfc.solve(ctx.h, ctx.w, ctx.rules, weights, pre, seed)
        if out.status == wfc.COMPLETE:
            return out.layout
    return None


def mutate(parent: Elite, rng: Rng, sigma: float = 0.5) -> Genome:
    """Three-step mutation: jitter weights, add or remove fixed tiles, reseed.

    Weights are multiplied by exp(N(0, sigma)) and clamped.  With equal
    probability, k ~ Uniform{1..4} fixed tiles are removed, or k tiles are
    copied from the parent's developed layout at positions not already
    fixed.  The seed is replaced by a fresh random 64-bit integer.
    """
    weights = parent.genome.tile_weights * np.exp(
        rng.normal(0.0, sigma, size=parent.genome.tile_weights.shape)
    )
    fixed = list(parent.genome.fixed_tiles)
    k = 1 + rng.choice_index(4)
    if rng.uniform() < 0.5:
        for _ in range(min(k, len(fixed))):
            fixed.pop(rng.choice_index(len(fixed)))
    else:
        h, w = parent.layout.shape
        taken = {(r, c) for _, r, c in fixed}
        free = [(r, c) for r in range(h) for c in range(w) if (r, c) not in taken]
        for _ in range(min(k, len(free))):
            r, c = free.pop(rng.choice_index(len(free)))
            fixed.append((int(parent.layout[r, c]), r, c))
    return Genome(weights, fixed, rng.seed64())


INSERTED = "Inserted"
REPLACED = "Replaced"
REJECTED = "Rejected"


class Archive:
    """5-D feature grid of elites with strict-improvement replacement."""

    def __init__(
        self,
        bins_per_dim: tuple[int, ...],
        bounds: tuple[tuple[float, float], ...],
    ):
        if len(bins_per_dim) != 5 or len(bounds) != 5:
            raise ValueError("archive is 5-dimensional")
        self.bins_per_dim = tuple(int(b) for b in bins_per_dim)
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        self.cells: dict[tuple[int, ...], Elite] = {}

    @classmethod
    def default(cls, h: int, w: int, cfg: FeatureConfig, bins: int = 5) -> "Archive":
        area = h * w
        return cls(
            (bins,) * 5,
            (
                (0.0, 12.0),
                (0.0, float(area)),
                (0.0, 60.0),
                (0.0, cfg.carbon_tree * area),
                (0.0, 1.0),
            ),
        )

    def bin_index(self, features: FeatureVector) -> tuple[int, ...]:
        vals = features.as_array()
        idx = []
        for v, (lo, hi), b in zip(vals, self.bounds, self.bins_per_dim):
            if np.isnan(v):
                raise ValueError("NaN feature")
            t = 0.0 if hi <= lo else (v - lo) / (hi - lo)
            idx.append(int(np.clip(int(t * b), 0, b - 1)))
        return tuple(idx)

    def insert(self, candidate: Elite) -> str:
        """Insert by feature bin; ties keep the incumbent."""
        if np.any(np.isnan(candidate.features.as_array())) or np.isnan(
            candidate.performance
        ):
            return REJECTED
        key = self.bin_index(candidate.features)
        incumbent = self.cells.get(key)
        if incumbent is None:
            self.cells[key] = candidate
            return INSERTED
        if candidate.performance > incumbent.performance:
            self.cells[key] = candidate
            return REPLACED
        return REJECTED

    def qd_score(self) -> float:
        # summed in sorted-cell order so the score is independent of
        # insertion history and survives save/load round trips bit-exactly
        return float(sum(self.cells[k].performance for k in sorted(self.cells)))

    def coverage(self) -> int:
        return len(self.cells)

    def elites(self) -> list[Elite]:
        return [self.cells[k] for k in sorted(self.cells)]

    def parent(self, rng: Rng) -> Elite:
        keys = sorted(self.cells)
        return self.cells[keys[rng.choice_index(len(keys))]]

    # -- checkpointing --------------------------------------------------

    def save(self, path: str | Path, config_hash: str = "") -> None:
        with open(path, "w") as f:
            header = {
                "format": "sitearchive v1",
                "bins_per_dim": list(self.bins_per_dim),
                "bounds": [list(b) for b in self.bounds],
                "config_hash": config_hash,
            }
            f.write(json.dumps(header) + "\n")
            for key in sorted(self.cells):
                e = self.cells[key]
                rec = {
                    "bin": list(key),
                    "genome": e.genome.to_dict(),
                    "features": e.features.to_dict(),
                    "performance": e.performance,
                    "layout": e.layout.reshape(-1).tolist(),
                    "shape": list(e.layout.shape),
                }
                f.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Archive":
        with open(path) as f:
            header = json.loads(f.readline())
            if header.get("format") != "sitearchive v1":
                raise ValueError("not an archive file")
            arch = cls(
                tuple(header["bins_per_dim"]),
                tuple(tuple(b) for b in header["bounds"]),
            )
            for line in f:
                rec = json.loads(line)
                elite = Elite(
                    Genome.from_dict(rec["genome"]),
                    np.array(rec["layout"], dtype=np.int32).reshape(rec["shape"]),
                    FeatureVector.from_dict(rec["features"]),
                    float(rec["performance"]),
                )
                arch.cells[tuple(rec["bin"])] = elite
        return arch


@dataclass
class QdConfig:
    h: int = 12
    w: int = 8
    init_count: int = 64
    iterations: int = 100
    batch_size: int = 16
    bins_per_dim: int = 5
    collector_bins: int = 12  # fine harvest grid; 0 disables
    sigma: float = 0.5
    sigma_init: float = 0.3
    restarts: int = 9
    seed: int = 0
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    target_designs: int | None = None  # stop once this many designs evaluated


@dataclass
class QdResult:
    archive: Archive
    collector: Archive | None  # finer-grained best-per-cell harvest grid
    history: list[Elite]  # accepted (inserted/replaced) elites, in order
    designs: list[Elite]  # every feasible evaluated design, in order
    evaluations: int
    infeasible: int
    qd_trace: list[float]  # qd-score after each iteration


def _random_genome(rng: Rng, n_tiles: int, sigma_init: float) -> Genome:
    mult = np.exp(rng.normal(0.0, sigma_init, size=n_tiles))
    return Genome(mult, [], rng.seed64())


def run_map_elites(
    cfg: QdConfig, catalog: TileCatalog, rules: AdjacencyRules
) -> QdResult:
    """Seed the archive with random genomes, then mutate/develop/insert."""
    ctx = DevelopContext(catalog, rules, cfg.h, cfg.w, cfg.feature_config, cfg.restarts)
    archive = Archive.default(cfg.h, cfg.w, cfg.feature_config, cfg.bins_per_dim)
    collector = (
        Archive.default(cfg.h, cfg.w, cfg.feature_config, cfg.collector_bins)
        if cfg.collector_bins
        else None
    )
    history: list[Elite] = []
    designs: list[Elite] = []
    evaluations = infeasible = 0
    trace: list[float] = []

    def consider(genome: Genome) -> None:
        nonlocal evaluations, infeasible
        evaluations += 1
        layout = develop(genome, ctx)
        if layout is None:
            infeasible += 1
            return
        fv, perf = evaluate(layout, catalog, cfg.feature_config)
        elite = Elite(genome, layout, fv, perf)
        designs.append(elite)
        if collector is not None:
            collector.insert(elite)
        if archive.insert(elite) in (INSERTED, REPLACED):
            history.append(elite)

    for i in range(cfg.init_count):
        consider(_random_genome(Rng(derive(cfg.seed, "init", i)), catalog.n, cfg.sigma_init))
    if not archive.cells:
        raise RuntimeError("no feasible initial genomes; check rules/config")
    trace.append(archive.qd_score())

    done = False
    for it in range(cfg.iterations):
        for b in range(cfg.batch_size):
            rng = Rng(derive(cfg.seed, "iter", it, b))
            parent = archive.parent(rng)
            consider(mutate(parent, rng, cfg.sigma))
            if cfg.target_designs is not None and len(designs) >= cfg.target_designs:
                done = True
                break
        trace.append(archive.qd_score())
        if done:
            break
    return QdResult(archive, collector, history, designs, evaluations, infeasible, trace)


def harvest_dataset(result: QdResult, count: int) -> list[Elite]:
    """Assemble the run's dataset: the fine collector's elites, spread-first.

    When the collector holds more designs than requested, subsample evenly
    across its (sorted) cells so feature-space spread is kept; when it holds
    fewer, top up with the most recent evaluated designs.  Falls back to the
    raw evaluation stream when the collector is disabled.
    """
    if result.collector is None:
        return result.designs[-count:]
    elites = result.collector.elites()
    if len(elites) >= count:
        idx = np.linspace(0, len(elites) - 1, count).astype(int)
        return [elites[i] for i in idx]
    chosen = list(elites)
    have = {id(e) for e in chosen}
    for e in reversed(result.designs):
        if len(chosen) >= count:
            break
        if id(e) not in have:
            chosen.append(e)
            have.add(id(e))
    return chosen


def save_designs(path: str | Path, elites: list[Elite]) -> None:
    """Line-delimited designs file: one evaluated layout per record."""
    with open(path, "w") as f:
        f.write(json.dumps({"format": "sitedesigns v1"}) + "\n")
        for e in elites:
            rec = {
                "genome": e.genome.to_dict(),
                "features": e.features.to_dict(),
                "performance": e.performance,
                "layout": e.layout.reshape(-1).tolist(),
                "shape": list(e.layout.shape),
            }
            f.write(json.dumps(rec) + "\n")


def load_designs(path: str | Path) -> list[Elite]:
    out = []
    with open(path) as f:
        header = json.loads(f.readline())
        if header.get("format") != "sitedesigns v1":
            raise ValueError(f"not a designs file: {path}")
        for line in f:
            rec = json.loads(line)
            out.append(
                Elite(
                    Genome.from_dict(rec["genome"]),
                    np.array(rec["layout"], dtype=np.int32).reshape(rec["shape"]),
                    FeatureVector.from_dict(rec["features"]),
                    float(rec["performance"]),
                )
            )
    return out


def sample_wfc_baseline(
    count: int,
    seed: int,
    catalog: TileCatalog,
    rules: AdjacencyRules,
    h: int = 12,
    w: int = 8,
    sigma_init: float = 0.3,
    feature_config: FeatureConfig = FeatureConfig(),
    restarts: int = 0,
) -> list[Elite]:
    """Repeated rollouts with random weights and seeds; no fixed tiles.

    Skips infeasible draws; aborts if the feasibility rate drops below 1%.
    """
    ctx = DevelopContext(catalog, rules, h, w, feature_config, restarts)
    out: list[Elite] = []
    attempts = 0
    while len(out) < count:
        genome = _random_genome(Rng(derive(seed, "sample", attempts)), catalog.n, sigma_init)
        attempts += 1
        layout = develop(genome, ctx)
        if attempts >= 200 and len(out) / attempts < 0.01:
            raise RuntimeError(
                f"baseline feasibility below 1% ({len(out)}/{attempts}); check rules"
            )
        if layout is None:
            continue
        fv, perf = evaluate(layout, catalog, feature_config)
        out.append(Elite(genome, layout, fv, perf))
    return out
