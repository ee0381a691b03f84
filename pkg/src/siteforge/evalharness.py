"""Exhaustive prompt-sweep evaluation: validity and per-attribute fidelity.

Generates N designs for each of the 243 label combinations, persists one raw
record per generation, and aggregates per-(feature, level) matrices so two
models can be compared cell by cell.  Every aggregate is recomputable from
the raw records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model as tile_lm
from . import wfc
from .dataset import LEVELS, all_label_tuples, labels_to_prompt
from .features import FEATURE_NAMES, evaluate
from .pipeline import GenerationContext, coarse_to_preconstraints
from .seeds import derive


@dataclass
class RawRecord:
    labels: tuple[str, ...]
    seed: int
    validity: bool
    features: dict | None
    fidelity: dict[str, bool] | None

    def to_json(self) -> str:
        return json.dumps(
            {
                "labels": list(self.labels),
                "seed": int(self.seed),
                "validity": self.validity,
                "features": self.features,
                "fidelity": self.fidelity,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "RawRecord":
        d = json.loads(line)
        return cls(
            tuple(d["labels"]), d["seed"], d["validity"], d["features"], d["fidelity"]
        )


@dataclass
class EvalReport:
    """15-cell validity/fidelity matrices plus overall means."""

    n_per_prompt: int
    master_seed: int
    checkpoint_hash: str
    grid: tuple[int, int]
    validity: dict[str, dict[str, float]]  # feature -> level -> rate
    fidelity: dict[str, dict[str, float | None]]  # None when no valid samples
    counts: dict[str, dict[str, dict[str, int]]]  # feature -> level -> {gen, valid, fid}
    mean_validity: float
    mean_fidelity: float | None

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_per_prompt": self.n_per_prompt,
            "master_seed": self.master_seed,
            "checkpoint_hash": self.checkpoint_hash,
            "grid": list(self.grid),
            "validity": self.validity,
            "fidelity": self.fidelity,
            "counts": self.counts,
            "mean_validity": self.mean_validity,
            "mean_fidelity": self.mean_fidelity,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            d["n_per_prompt"],
            d["master_seed"],
            d["checkpoint_hash"],
            tuple(d["grid"]),
            d["validity"],
            d["fidelity"],
            d["counts"],
            d["mean_validity"],
            d["mean_fidelity"],
        )


def aggregate(records: list[RawRecord], n_per_prompt: int, master_seed: int,
              checkpoint_hash: str, grid: tuple[int, int]) -> EvalReport:
    """Fold raw records into the 15-cell matrices.

    Validity denominators count all generations with that (feature, level) in
    the prompt; fidelity denominators count only valid generations.  Cells
    with zero valid samples report null fidelity, not zero.
    """
    gen: dict[tuple[str, str], int] = {}
    valid: dict[tuple[str, str], int] = {}
    fid: dict[tuple[str, str], int] = {}
    for name in FEATURE_NAMES:
        for lv in LEVELS:
            gen[(name, lv)] = valid[(name, lv)] = fid[(name, lv)] = 0
    for rec in records:
        for i, name in enumerate(FEATURE_NAMES):
            key = (name, rec.labels[i])
            gen[key] += 1
            if rec.validity:
                valid[key] += 1
                if rec.fidelity[name]:
                    fid[key] += 1

    validity = {
        name: {lv: (valid[(name, lv)] / gen[(name, lv)]) if gen[(name, lv)] else 0.0
               for lv in LEVELS}
        for name in FEATURE_NAMES
    }
    fidelity = {
        name: {
            lv: (fid[(name, lv)] / valid[(name, lv)]) if valid[(name, lv)] else None
            for lv in LEVELS
        }
        for name in FEATURE_NAMES
    }
    counts = {
        name: {
            lv: {
                "generations": gen[(name, lv)],
                "valid": valid[(name, lv)],
                "fidelity_hits": fid[(name, lv)],
            }
            for lv in LEVELS
        }
        for name in FEATURE_NAMES
    }
    v_cells = [validity[n][lv] for n in FEATURE_NAMES for lv in LEVELS]
    f_cells = [fidelity[n][lv] for n in FEATURE_NAMES for lv in LEVELS
               if fidelity[n][lv] is not None]
    return EvalReport(
        n_per_prompt,
        master_seed,
        checkpoint_hash,
        grid,
        validity,
        fidelity,
        counts,
        float(np.mean(v_cells)),
        float(np.mean(f_cells)) if f_cells else None,
    )


def sweep(
    ctx: GenerationContext,
    n_per_prompt: int,
    master_seed: int,
    raw_path: str | Path | None = None,
    temperature: float = 1.0,
    top_k: int = 7,
) -> tuple[EvalReport, list[RawRecord]]:
    """Run all 243 prompts x n replicates and aggregate.

    Per-job seeds derive from (master seed, prompt index, replicate index),
    so the sweep is deterministic and independent of batching.  Each prompt's
    replicates are sampled as one batch, then refined one solver attempt each.
    """
    if n_per_prompt < 1:
        raise ValueError("n_per_prompt must be >= 1")
    ctx.verify_hashes()
    records: list[RawRecord] = []
    for p_idx, labels in enumerate(all_label_tuples()):
        seeds = [derive(master_seed, "sweep", p_idx, rep) for rep in range(n_per_prompt)]
        samples = tile_lm.sample_batch(
            ctx.checkpoint.model,
            [labels] * n_per_prompt,
            ctx.h,
            ctx.w,
            [derive(s, "lm") for s in seeds],
            temperature,
            top_k,
        )
        for rep, (seed, sm) in enumerate(zip(seeds, samples)):
            pre, _ = coarse_to_preconstraints(sm.categories, ctx.catalog)
            outcome = wfc.solve(
                ctx.h, ctx.w, ctx.rules, ctx.rules.weights, pre, derive(seed, "solve")
            )
            if outcome.status != wfc.COMPLETE:
                records.append(RawRecord(labels, seed, False, None, None))
                continue
            fv, _ = evaluate(outcome.layout, ctx.catalog, ctx.feature_config)
            actual = ctx.schema.bin_features(fv)
            fid = {name: actual[i] == labels[i] for i, name in enumerate(FEATURE_NAMES)}
            records.append(RawRecord(labels, seed, True, fv.to_dict(), fid))
    if raw_path is not None:
        with open(raw_path, "w") as f:
            for rec in records:
                f.write(rec.to_json() + "\n")
    report = aggregate(
        records,
        n_per_prompt,
        master_seed,
        ctx.checkpoint.content_hash(),
        (ctx.h, ctx.w),
    )
    return report, records


def load_raw(path: str | Path) -> list[RawRecord]:
    return [RawRecord.from_json(ln) for ln in Path(path).read_text().splitlines() if ln]


@dataclass
class Comparison:
    validity_delta: dict[str, dict[str, float]]
    fidelity_delta: dict[str, dict[str, float | None]]
    mean_validity: tuple[float, float]
    mean_fidelity: tuple[float | None, float | None]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "validity_delta": self.validity_delta,
            "fidelity_delta": self.fidelity_delta,
            "mean_validity": list(self.mean_validity),
            "mean_fidelity": list(self.mean_fidelity),
        }

    def summary(self) -> str:
        lines = [
            f"mean validity: a={self.mean_validity[0]:.4f} b={self.mean_validity[1]:.4f} "
            f"delta={self.mean_validity[0] - self.mean_validity[1]:+.4f}"
        ]
        fa, fb = self.mean_fidelity
        if fa is not None and fb is not None:
            lines.append(
                f"mean fidelity: a={fa:.4f} b={fb:.4f} delta={fa - fb:+.4f}"
            )
        lines.append("per-cell deltas (validity / fidelity):")
        for name in FEATURE_NAMES:
            cells = []
            for lv in LEVELS:
                vd = self.validity_delta[name][lv]
                fd = self.fidelity_delta[name][lv]
                fd_s = "null" if fd is None else f"{fd:+.3f}"
                cells.append(f"{lv}:{vd:+.3f}/{fd_s}")
            lines.append(f"  {name:13s} " + "  ".join(cells))
        return "\n".join(lines) + "\n"


def compare(a: EvalReport, b: EvalReport) -> Comparison:
    """Per-cell deltas (a minus b) with config compatibility checks."""
    if a.n_per_prompt != b.n_per_prompt or tuple(a.grid) != tuple(b.grid):
        raise ValueError("reports are not comparable (different N or grid)")
    vdelta = {
        name: {lv: a.validity[name][lv] - b.validity[name][lv] for lv in LEVELS}
        for name in FEATURE_NAMES
    }
    fdelta: dict[str, dict[str, float | None]] = {}
    for name in FEATURE_NAMES:
        fdelta[name] = {}
        for lv in LEVELS:
            fa, fb = a.fidelity[name][lv], b.fidelity[name][lv]
            fdelta[name][lv] = None if fa is None or fb is None else fa - fb
    return Comparison(
        vdelta,
        fdelta,
        (a.mean_validity, b.mean_validity),
        (a.mean_fidelity, b.mean_fidelity),
    )
