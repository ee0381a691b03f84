"""Dataset building: tercile labels, tokenization, prompts, and statistics.

Evaluated designs become line-delimited JSON records of (token string,
features, tercile labels, canonical prompt).  Label cut points are fitted
once on pooled feature values and persisted next to every dataset and model
so downstream fidelity checks use identical bins.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import CATEGORY_CHARS, Category, TileCatalog
from .features import FEATURE_NAMES, FeatureConfig, FeatureVector

START_CHAR = "<"
END_CHAR = ">"
LEVELS = ("low", "mid", "high")

#: Canonical phrase per feature, in fixed order.
FEATURE_PHRASES = {
    "num_parks": "number of parks",
    "largest_park": "largest park",
    "total_units": "total units",
    "carbon": "sequestered carbon",
    "privacy": "privacy",
}

DATASET_FORMAT = "sitedataset v1"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabelSchema:
    """Per-feature (t_low, t_high) cut points plus fitting provenance."""

    cuts: tuple[tuple[float, float], ...]  # one pair per feature, spec order
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.cuts) != 5:
            raise DatasetError("schema needs five cut pairs")
        for lo, hi in self.cuts:
            if lo > hi:
                raise DatasetError("t_low must be <= t_high")

    def bin_value(self, feature_index: int, value: float) -> str:
        lo, hi = self.cuts[feature_index]
        if value < lo:
            return "low"
        if value <= hi:
            return "mid"
        return "high"

    def bin_features(self, fv: FeatureVector) -> tuple[str, ...]:
        vals = fv.as_array()
        return tuple(self.bin_value(i, float(v)) for i, v in enumerate(vals))

    def to_dict(self) -> dict:
        return {
            "cuts": {name: list(self.cuts[i]) for i, name in enumerate(FEATURE_NAMES)},
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelSchema":
        return cls(
            tuple(tuple(d["cuts"][name]) for name in FEATURE_NAMES),
            tuple(d.get("provenance", ())),
        )

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.blake2b(payload, digest_size=16).hexdigest()


def _nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    n = len(sorted_vals)
    k = max(1, int(np.ceil(q * n)))
    return float(sorted_vals[k - 1])


def fit_schema(
    feature_rows: np.ndarray, provenance: tuple[str, ...] = ()
) -> LabelSchema:
    """Cut points at the empirical 1/3 and 2/3 quantiles (nearest rank).

    ``feature_rows`` is (N, 5) over the pooled designs; sorted before
    quantiles so the result is independent of input order.
    """
    rows = np.asarray(feature_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != 5:
        raise DatasetError("expected an (N, 5) feature matrix")
    if rows.shape[0] < 30:
        raise DatasetError("need at least 30 designs to fit a label schema")
    cuts = []
    for i in range(5):
        vals = np.sort(rows[:, i])
        cuts.append((_nearest_rank(vals, 1 / 3), _nearest_rank(vals, 2 / 3)))
    return LabelSchema(tuple(cuts), provenance)


def tokenize(grid: np.ndarray, catalog: TileCatalog) -> str:
    """Flatten a layout row-major into category characters with start/end."""
    cats = catalog.categories[np.asarray(grid)]
    chars = [CATEGORY_CHARS[int(c)] for c in cats.reshape(-1)]
    return START_CHAR + "".join(chars) + END_CHAR


def tokenize_categories(cats: np.ndarray) -> str:
    chars = [CATEGORY_CHARS[int(c)] for c in np.asarray(cats).reshape(-1)]
    return START_CHAR + "".join(chars) + END_CHAR


def detokenize(tokens: str, h: int, w: int) -> np.ndarray:
    """Token string back to an (h, w) category grid."""
    if len(tokens) != h * w + 2:
        raise DatasetError(f"token string has length {len(tokens)}, want {h * w + 2}")
    if tokens[0] != START_CHAR or tokens[-1] != END_CHAR:
        raise DatasetError("token string must be wrapped in start/end markers")
    body = tokens[1:-1]
    try:
        vals = [CATEGORY_CHARS.index(ch) for ch in body]
    except ValueError as e:
        raise DatasetError(f"unknown category character: {e}")
    return np.array(vals, dtype=np.int8).reshape(h, w)


def labels_to_prompt(labels: tuple[str, ...]) -> str:
    """Canonical fixed-order phrase list for a 5-tuple of levels."""
    if len(labels) != 5 or any(lv not in LEVELS for lv in labels):
        raise DatasetError(f"bad label tuple {labels!r}")
    return ", ".join(
        f"{lv} {FEATURE_PHRASES[name]}" for lv, name in zip(labels, FEATURE_NAMES)
    )


def parse_prompt(text: str) -> tuple[str, ...]:
    """Inverse of labels_to_prompt for canonical strings."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 5:
        raise DatasetError(f"expected five comma-separated phrases, got {len(parts)}")
    labels = []
    for part, name in zip(parts, FEATURE_NAMES):
        level, _, phrase = part.partition(" ")
        if level not in LEVELS or phrase != FEATURE_PHRASES[name]:
            raise DatasetError(f"non-canonical phrase {part!r}")
        labels.append(level)
    return tuple(labels)


def all_label_tuples() -> list[tuple[str, ...]]:
    """All 243 label combinations in lexicographic (low, mid, high) order."""
    out = []

    def rec(prefix):
        if len(prefix) == 5:
            out.append(tuple(prefix))
            return
        for lv in LEVELS:
            rec(prefix + [lv])

    rec([])
    return out


def gini(counts) -> float:
    """Mean absolute difference Gini over histogram bin counts.

    0 means perfectly uniform bins; approaches 1 as mass concentrates.
    """
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("counts must be a non-empty vector")
    if np.any(c < 0):
        raise ValueError("counts must be non-negative")
    total = float(c.sum())
    if total <= 0:
        raise ValueError("counts must not be all zero")
    n = c.size
    mean = total / n
    return float(np.abs(c[:, None] - c[None, :]).sum() / (2.0 * n * n * mean))


@dataclass
class DistributionReport:
    """Ten-bin histograms and Gini per feature, plus performance."""

    histograms: dict[str, list[int]]
    ginis: dict[str, float]
    bin_edges: dict[str, list[float]]

    def to_dict(self) -> dict:
        return {
            "histograms": self.histograms,
            "ginis": self.ginis,
            "bin_edges": self.bin_edges,
        }


def feature_bounds(h: int, w: int, cfg: FeatureConfig) -> dict[str, tuple[float, float]]:
    """Fixed per-feature histogram/archive bounds for an (h, w) grid."""
    area = h * w
    return {
        "num_parks": (0.0, 12.0),
        "largest_park": (0.0, float(area)),
        "total_units": (0.0, 60.0),
        "carbon": (0.0, cfg.carbon_tree * area),
        "privacy": (0.0, 1.0),
        "performance": (0.0, 1.0),
    }


def distribution_report(
    features: np.ndarray, performance: np.ndarray, h: int, w: int, cfg: FeatureConfig
) -> DistributionReport:
    bounds = feature_bounds(h, w, cfg)
    hists: dict[str, list[int]] = {}
    ginis: dict[str, float] = {}
    edges_out: dict[str, list[float]] = {}
    cols = {name: features[:, i] for i, name in enumerate(FEATURE_NAMES)}
    cols["performance"] = performance
    for name, vals in cols.items():
        lo, hi = bounds[name]
        edges = np.linspace(lo, hi, 11)
        hist = np.histogram(np.clip(vals, lo, hi), edges)[0]
        hists[name] = [int(x) for x in hist]
        ginis[name] = gini(hist)
        edges_out[name] = [float(e) for e in edges]
    return DistributionReport(hists, ginis, edges_out)


@dataclass
class DatasetRecord:
    tokens: str
    features: FeatureVector
    labels: tuple[str, ...]
    prompt: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": 1,
                "tokens": self.tokens,
                "features": self.features.to_dict(),
                "labels": list(self.labels),
                "prompt": self.prompt,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        d = json.loads(line)
        return cls(
            d["tokens"],
            FeatureVector.from_dict(d["features"]),
            tuple(d["labels"]),
            d["prompt"],
        )


def build_dataset(
    designs: list,
    schema: LabelSchema,
    catalog: TileCatalog,
    h: int,
    w: int,
    cfg: FeatureConfig,
    path: str | Path,
    dataset_id: str = "dataset",
) -> DistributionReport:
    """Write one labeled record per evaluated design plus a metadata file.

    ``designs`` are qd.Elite-shaped objects (layout, features, performance).
    Records whose layout does not match the configured grid shape are
    rejected with a diagnostic.
    """
    path = Path(path)
    records = []
    rejected = 0
    feats, perfs = [], []
    for e in designs:
        if e.layout.shape != (h, w):
            rejected += 1
            continue
        labels = schema.bin_features(e.features)
        records.append(
            DatasetRecord(
                tokenize(e.layout, catalog), e.features, labels, labels_to_prompt(labels)
            )
        )
        feats.append(e.features.as_array())
        perfs.append(e.performance)
    with open(path, "w") as f:
        for rec in records:
            f.write(rec.to_json() + "\n")
    feats_arr = (
        np.array(feats) if feats else np.zeros((0, 5))
    )
    perf_arr = np.array(perfs) if perfs else np.zeros(0)
    report = (
        distribution_report(feats_arr, perf_arr, h, w, cfg)
        if len(records)
        else DistributionReport({}, {}, {})
    )
    meta = {
        "format": DATASET_FORMAT,
        "dataset_id": dataset_id,
        "grid": {"h": h, "w": w},
        "records": len(records),
        "rejected": rejected,
        "feature_config": cfg.to_dict(),
        "label_schema": schema.to_dict(),
        "catalog_hash": catalog.content_hash(),
        "distribution": report.to_dict(),
    }
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if rejected:
        import sys

        print(f"build_dataset: rejected {rejected} records with wrong shape", file=sys.stderr)
    return report


def load_dataset(path: str | Path) -> tuple[list[DatasetRecord], dict]:
    path = Path(path)
    records = [DatasetRecord.from_json(ln) for ln in path.read_text().splitlines() if ln]
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return records, meta
