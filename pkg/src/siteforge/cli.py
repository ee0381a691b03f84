"""Command-line surface for the full experiment lifecycle.

Subcommands: synth-qd, synth-sample, build-dataset, train, generate, regen,
sweep, compare, report-dist, serve.  Every run writes a manifest tying its
outputs to the seeds and artifact hashes that produced them.  Exit codes:
0 success, 2 usage error, 3 artifact hash mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import evalharness, model as tile_lm, pipeline, qd, render, wfc
from .catalog import build_catalog, shipped_rules
from .features import FEATURE_NAMES, FeatureConfig
from .prompts import PromptError, parse_free_text
from .seeds import derive

EXIT_USAGE = 2
EXIT_HASH_MISMATCH = 3

DEFAULT_GRID = (12, 8)


class HashMismatch(RuntimeError):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _grid(cfg: dict) -> tuple[int, int]:
    return int(cfg.get("h", DEFAULT_GRID[0])), int(cfg.get("w", DEFAULT_GRID[1]))


def _feature_config(cfg: dict) -> FeatureConfig:
    return FeatureConfig.from_dict(cfg.get("feature_config", {})) if cfg.get(
        "feature_config"
    ) else FeatureConfig()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


class Manifest:
    """Records what a run consumed and produced."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.data = {
            "command": command,
            "argv": sys.argv[1:],
            "seed": getattr(args, "seed", None),
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "hashes": {},
            "outputs": [],
        }

    def add_hash(self, name: str, value: str) -> None:
        self.data["hashes"][name] = value

    def add_output(self, path: Path) -> None:
        self.data["outputs"].append(str(path))

    def write(self, out: Path) -> None:
        self.data["finished"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        (out / "manifest.json").write_text(json.dumps(self.data, indent=2) + "\n")


def _runtime(cfg: dict):
    catalog = build_catalog()
    return catalog, shipped_rules(catalog)


def _load_schema(path: str) -> ds.LabelSchema:
    return ds.LabelSchema.from_dict(json.loads(Path(path).read_text()))


def _generation_context(args, cfg: dict) -> pipeline.GenerationContext:
    catalog, rules = _runtime(cfg)
    ckpt = tile_lm.load_checkpoint(args.checkpoint)
    schema = _load_schema(args.schema)
    h, w = _grid(cfg)
    ctx = pipeline.GenerationContext(
        catalog, rules, schema, ckpt, h, w, _feature_config(cfg)
    )
    try:
        ctx.verify_hashes()
    except RuntimeError as e:
        raise HashMismatch(str(e))
    return ctx


# ------------------------------------------------------------- subcommands


def cmd_synth_qd(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("synth-qd", args)
    catalog, rules = _runtime(cfg)
    man.add_hash("catalog", catalog.content_hash())
    h, w = _grid(cfg)
    qcfg = qd.QdConfig(
        h=h,
        w=w,
        init_count=int(cfg.get("qd_init_count", 100)),
        iterations=int(cfg.get("qd_iterations", 10_000_000)),
        batch_size=int(cfg.get("qd_batch_size", 16)),
        collector_bins=int(cfg.get("qd_collector_bins", 12)),
        sigma=float(cfg.get("qd_sigma", 0.5)),
        sigma_init=float(cfg.get("qd_sigma_init", 0.3)),
        restarts=int(cfg.get("qd_restarts", 9)),
        seed=args.seed,
        feature_config=_feature_config(cfg),
        target_designs=args.evals,
    )
    res = qd.run_map_elites(qcfg, catalog, rules)
    designs = qd.harvest_dataset(res, args.count)
    if len(designs) < args.count:
        print(
            f"warning: collected {len(designs)} designs "
            f"(< requested {args.count}) after {res.evaluations} evaluations",
            file=sys.stderr,
        )
    qd.save_designs(out / "designs.jsonl", designs)
    import hashlib
    from dataclasses import asdict

    qcfg_hash = hashlib.blake2b(
        json.dumps(asdict(qcfg), sort_keys=True, default=str).encode(), digest_size=16
    ).hexdigest()
    res.archive.save(out / "archive.jsonl", config_hash=qcfg_hash)
    (out / "synth_stats.json").write_text(
        json.dumps(
            {
                "evaluations": res.evaluations,
                "infeasible": res.infeasible,
                "accepted": len(res.history),
                "coverage": res.archive.coverage(),
                "qd_score": res.archive.qd_score(),
                "qd_trace": res.qd_trace,
            },
            indent=2,
        )
        + "\n"
    )
    for name in ("designs.jsonl", "archive.jsonl", "synth_stats.json"):
        man.add_output(out / name)
    man.write(out)
    print(f"synth-qd: {len(designs)} designs, coverage {res.archive.coverage()}")
    return 0


def cmd_synth_sample(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("synth-sample", args)
    catalog, rules = _runtime(cfg)
    man.add_hash("catalog", catalog.content_hash())
    h, w = _grid(cfg)
    designs = qd.sample_wfc_baseline(
        args.count,
        args.seed,
        catalog,
        rules,
        h,
        w,
        sigma_init=float(cfg.get("qd_sigma_init", 1.0)),
        feature_config=_feature_config(cfg),
    )
    qd.save_designs(out / "designs.jsonl", designs)
    man.add_output(out / "designs.jsonl")
    man.write(out)
    print(f"synth-sample: {len(designs)} designs")
    return 0


def cmd_build_dataset(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("build-dataset", args)
    catalog, _ = _runtime(cfg)
    man.add_hash("catalog", catalog.content_hash())
    h, w = _grid(cfg)
    fcfg = _feature_config(cfg)
    sets = [(Path(p).stem + "_" + Path(p).parent.name, qd.load_designs(p)) for p in args.designs]
    pooled = np.concatenate(
        [np.array([e.features.as_array() for e in elites]) for _, elites in sets]
    )
    schema = ds.fit_schema(pooled, provenance=tuple(args.designs))
    (out / "schema.json").write_text(json.dumps(schema.to_dict(), indent=2) + "\n")
    man.add_hash("schema", schema.content_hash())
    man.add_output(out / "schema.json")
    for i, ((name, elites), src) in enumerate(zip(sets, args.designs)):
        ds_path = out / f"dataset_{i}.jsonl"
        report = ds.build_dataset(elites, schema, catalog, h, w, fcfg, ds_path, dataset_id=src)
        man.add_output(ds_path)
        print(f"dataset_{i}: {len(elites)} records from {src}")
        print("  ginis:", {k: round(v, 3) for k, v in report.ginis.items()})
    man.write(out)
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("train", args)
    catalog, _ = _runtime(cfg)
    records, meta = ds.load_dataset(args.dataset)
    if not records:
        print("error: empty dataset", file=sys.stderr)
        return 1
    schema = ds.LabelSchema.from_dict(meta["label_schema"])
    if meta.get("catalog_hash") != catalog.content_hash():
        print("error: dataset was built against a different catalog", file=sys.stderr)
        return EXIT_HASH_MISMATCH
    mcfg = tile_lm.ModelConfig(
        layers=int(cfg.get("lm_layers", 4)),
        heads=int(cfg.get("lm_heads", 4)),
        model_dim=int(cfg.get("lm_dim", 128)),
        ff_dim=int(cfg.get("lm_ff", 512)),
        context=int(cfg.get("lm_context", 512)),
    )
    result = tile_lm.train(
        records,
        mcfg,
        steps=args.steps,
        batch=int(cfg.get("train_batch", 16)),
        lr=float(cfg.get("train_lr", 1e-3)),
        seed=args.seed,
    )
    ckpt_path = out / "model.ckpt"
    tile_lm.save_checkpoint(
        result.model,
        ckpt_path,
        result.steps_done,
        schema.content_hash(),
        catalog.content_hash(),
    )
    with open(out / "loss.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        writer.writerows(result.loss_log)
    man.add_hash("catalog", catalog.content_hash())
    man.add_hash("schema", schema.content_hash())
    man.add_output(ckpt_path)
    man.add_output(out / "loss.csv")
    man.write(out)
    final = result.loss_log[-1][1] if result.loss_log else float("nan")
    print(
        f"train: {result.steps_done} steps, final loss {final:.4f}"
        + (" (diverged; restored snapshot)" if result.diverged else "")
    )
    return 0


def _parse_labels(args) -> dict[str, str]:
    labels: dict[str, str] = {}
    if args.labels:
        labels.update(json.loads(args.labels))
    if args.prompt:
        labels.update(parse_free_text(args.prompt))
    return labels


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("generate", args)
    ctx = _generation_context(args, cfg)
    man.add_hash("catalog", ctx.catalog.content_hash())
    man.add_hash("schema", ctx.schema.content_hash())
    man.add_hash("checkpoint", ctx.checkpoint.content_hash())
    req = pipeline.GenerationRequest(
        labels=_parse_labels(args),
        seed=args.seed,
        temperature=args.temperature,
        top_k=args.top_k,
    )
    res = pipeline.generate(req, ctx)
    (out / "result.json").write_text(json.dumps(res.to_dict(), indent=2, sort_keys=True) + "\n")
    man.add_output(out / "result.json")
    if res.validity:
        (out / "layout.txt").write_text(wfc.serialize_layout(res.detailed))
        render.write_layout_svg(res.detailed, ctx.catalog, out / "layout.svg")
        man.add_output(out / "layout.txt")
        man.add_output(out / "layout.svg")
    man.write(out)
    print(f"generate: validity={res.validity} labels={','.join(res.labels)}")
    return 0


def cmd_regen(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("regen", args)
    ctx = _generation_context(args, cfg)
    man.add_hash("checkpoint", ctx.checkpoint.content_hash())
    base = wfc.parse_layout(Path(args.base).read_text())
    r, c, h, w = (int(x) for x in args.region.split(","))
    req = pipeline.GenerationRequest(
        labels=_parse_labels(args),
        seed=args.seed,
        temperature=args.temperature,
        top_k=args.top_k,
        base_layout=base,
        erase_region=pipeline.Region(r, c, h, w),
    )
    res = pipeline.regenerate_region(req, ctx)
    (out / "result.json").write_text(json.dumps(res.to_dict(), indent=2, sort_keys=True) + "\n")
    man.add_output(out / "result.json")
    if res.validity:
        (out / "layout.txt").write_text(wfc.serialize_layout(res.detailed))
        render.write_layout_svg(res.detailed, ctx.catalog, out / "layout.svg")
        man.add_output(out / "layout.txt")
    man.write(out)
    print(f"regen: validity={res.validity}")
    return 0


def _report_csv(report: evalharness.EvalReport, path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["feature", "level", "validity", "fidelity", "generations", "valid"])
        for name in FEATURE_NAMES:
            for lv in ds.LEVELS:
                fid = report.fidelity[name][lv]
                writer.writerow(
                    [
                        name,
                        lv,
                        f"{report.validity[name][lv]:.6f}",
                        "" if fid is None else f"{fid:.6f}",
                        report.counts[name][lv]["generations"],
                        report.counts[name][lv]["valid"],
                    ]
                )


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("sweep", args)
    ctx = _generation_context(args, cfg)
    man.add_hash("checkpoint", ctx.checkpoint.content_hash())
    report, _records = evalharness.sweep(
        ctx, args.n, args.seed, raw_path=out / "raw.jsonl", temperature=args.temperature
    )
    (out / "report.json").write_text(report.serialize())
    _report_csv(report, out / "report.csv")
    for name in ("raw.jsonl", "report.json", "report.csv"):
        man.add_output(out / name)
    man.write(out)
    print(
        f"sweep: {args.n * 243} generations, mean validity {report.mean_validity:.3f}, "
        f"mean fidelity {report.mean_fidelity if report.mean_fidelity is None else round(report.mean_fidelity, 3)}"
    )
    return 0


def cmd_compare(args) -> int:
    out = _out_dir(args)
    man = Manifest("compare", args)
    rep_a = evalharness.EvalReport.from_dict(json.loads(Path(args.a).read_text()))
    rep_b = evalharness.EvalReport.from_dict(json.loads(Path(args.b).read_text()))
    comp = evalharness.compare(rep_a, rep_b)
    (out / "comparison.json").write_text(json.dumps(comp.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "comparison.txt").write_text(comp.summary())
    man.add_output(out / "comparison.json")
    man.add_output(out / "comparison.txt")
    man.write(out)
    print(comp.summary())
    return 0


def cmd_report_dist(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    man = Manifest("report-dist", args)
    records, meta = ds.load_dataset(args.dataset)
    h = meta["grid"]["h"]
    w = meta["grid"]["w"]
    fcfg = FeatureConfig.from_dict(meta["feature_config"])
    feats = np.array([r.features.as_array() for r in records])
    # Performance is recomputable from tokens: share of non-empty cells.
    perfs = np.array(
        [1.0 - r.tokens[1:-1].count(ds.CATEGORY_CHARS[-1]) / (h * w) for r in records]
    )
    report = ds.distribution_report(feats, perfs, h, w, fcfg)
    (out / "distribution.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    with open(out / "distribution.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "gini"] + [f"bin{i}" for i in range(10)])
        for name, hist in report.histograms.items():
            writer.writerow([name, f"{report.ginis[name]:.6f}"] + hist)
    man.add_output(out / "distribution.json")
    man.add_output(out / "distribution.csv")
    man.write(out)
    for name, g in report.ginis.items():
        print(f"{name:13s} gini {g:.3f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    cfg = _load_config(args.config)
    ctx = _generation_context(args, cfg)
    app = build_app(ctx, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="siteforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        if out:
            sp.add_argument("--out", type=str, required=True, help="output directory")

    sp = sub.add_parser("synth-qd", help="synthesize designs with the elite archive")
    common(sp)
    sp.add_argument("--count", type=int, default=2000, help="dataset size to harvest")
    sp.add_argument("--evals", type=int, default=12_000, help="evaluation budget")
    sp.set_defaults(func=cmd_synth_qd)

    sp = sub.add_parser("synth-sample", help="synthesize designs by random rollouts")
    common(sp)
    sp.add_argument("--count", type=int, default=2000)
    sp.set_defaults(func=cmd_synth_sample)

    sp = sub.add_parser("build-dataset", help="fit pooled label schema and tokenize")
    common(sp)
    sp.add_argument("--designs", action="append", required=True, help="designs.jsonl (repeatable)")
    sp.set_defaults(func=cmd_build_dataset)

    sp = sub.add_parser("train", help="train the tile model on a dataset")
    common(sp)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--steps", type=int, default=20_000)
    sp.set_defaults(func=cmd_train)

    for name, fn in (("generate", cmd_generate), ("regen", cmd_regen)):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--checkpoint", required=True)
        sp.add_argument("--schema", required=True)
        sp.add_argument("--prompt", type=str, default=None, help="free-text prompt")
        sp.add_argument("--labels", type=str, default=None, help="JSON {feature: level}")
        sp.add_argument("--temperature", type=float, default=1.0)
        sp.add_argument("--top-k", dest="top_k", type=int, default=7)
        if name == "regen":
            sp.add_argument("--base", required=True, help="layout.txt to edit")
            sp.add_argument("--region", required=True, help="row,col,height,width")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("sweep", help="exhaustive 243-prompt evaluation")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--schema", required=True)
    sp.add_argument("--n", type=int, default=10, help="designs per prompt")
    sp.add_argument("--temperature", type=float, default=1.0)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="delta table between two sweep reports")
    common(sp)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("report-dist", help="distribution report for a dataset")
    common(sp)
    sp.add_argument("--dataset", required=True)
    sp.set_defaults(func=cmd_report_dist)

    sp = sub.add_parser("serve", help="HTTP service for the studio UI")
    common(sp, out=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--schema", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8765)
    sp.add_argument("--ui", default=None, help="frontend directory to serve at /")
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HashMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HASH_MISMATCH
    except PromptError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
