import json
from pathlib import Path

import numpy as np
import pytest

from siteforge.cli import main

CFG = {
    "h": 6,
    "w": 5,
    "qd_init_count": 10,
    "qd_iterations": 50,
    "qd_batch_size": 8,
    "lm_layers": 2,
    "lm_heads": 2,
    "lm_dim": 32,
    "lm_ff": 64,
    "lm_context": 64,
    "train_batch": 8,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Run the full CLI lifecycle once into a shared workspace."""
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(CFG))
    cfg = ["--config", str(cfg_path)]

    assert main(["synth-qd", "--out", str(root / "qd"), "--seed", "1",
                 "--count", "40", *cfg]) == 0
    assert main(["synth-sample", "--out", str(root / "sample"), "--seed", "2",
                 "--count", "40", *cfg]) == 0
    assert main(["build-dataset", "--out", str(root / "data"),
                 "--designs", str(root / "qd" / "designs.jsonl"),
                 "--designs", str(root / "sample" / "designs.jsonl"), *cfg]) == 0
    assert main(["train", "--out", str(root / "model"), "--seed", "3",
                 "--dataset", str(root / "data" / "dataset_0.jsonl"),
                 "--steps", "40", *cfg]) == 0
    return root, cfg


def test_synth_outputs_exist(workspace):
    root, _ = workspace
    assert (root / "qd" / "designs.jsonl").exists()
    assert (root / "qd" / "archive.jsonl").exists()
    assert (root / "qd" / "manifest.json").exists()
    stats = json.loads((root / "qd" / "synth_stats.json").read_text())
    assert stats["accepted"] >= 1
    trace = stats["qd_trace"]
    assert all(a <= b + 1e-12 for a, b in zip(trace, trace[1:]))


def test_dataset_outputs(workspace):
    root, _ = workspace
    assert (root / "data" / "schema.json").exists()
    meta = json.loads((root / "data" / "dataset_0.jsonl.meta.json").read_text())
    assert meta["records"] == 40
    assert meta["grid"] == {"h": 6, "w": 5}


def test_train_outputs(workspace):
    root, _ = workspace
    assert (root / "model" / "model.ckpt").exists()
    loss_lines = (root / "model" / "loss.csv").read_text().splitlines()
    assert loss_lines[0] == "step,loss"
    assert len(loss_lines) >= 2


def test_generate_byte_identical_across_runs(workspace):
    root, cfg = workspace
    args = ["generate", "--seed", "7",
            "--checkpoint", str(root / "model" / "model.ckpt"),
            "--schema", str(root / "data" / "schema.json"),
            "--prompt", "high number of parks", *cfg]
    assert main([*args, "--out", str(root / "gen1")]) == 0
    assert main([*args, "--out", str(root / "gen2")]) == 0
    r1 = (root / "gen1" / "result.json").read_bytes()
    r2 = (root / "gen2" / "result.json").read_bytes()
    assert r1 == r2
    l1, l2 = root / "gen1" / "layout.txt", root / "gen2" / "layout.txt"
    if l1.exists():
        assert l1.read_bytes() == l2.read_bytes()
        assert (root / "gen1" / "layout.svg").exists()


def test_generate_free_text_prompt_applied(workspace):
    root, cfg = workspace
    assert main(["generate", "--seed", "9", "--out", str(root / "gen3"),
                 "--checkpoint", str(root / "model" / "model.ckpt"),
                 "--schema", str(root / "data" / "schema.json"),
                 "--prompt", "many parks, little carbon", *cfg]) == 0
    result = json.loads((root / "gen3" / "result.json").read_text())
    assert result["labels"][0] == "high"
    assert result["labels"][3] == "low"


def test_generate_unknown_prompt_usage_error(workspace):
    root, cfg = workspace
    assert main(["generate", "--seed", "9", "--out", str(root / "gen4"),
                 "--checkpoint", str(root / "model" / "model.ckpt"),
                 "--schema", str(root / "data" / "schema.json"),
                 "--prompt", "many dragons", *cfg]) == 2


def test_regen_roundtrip(workspace):
    root, cfg = workspace
    # find a valid generation to edit
    for seed in range(30):
        assert main(["generate", "--seed", str(seed), "--out", str(root / "base"),
                     "--checkpoint", str(root / "model" / "model.ckpt"),
                     "--schema", str(root / "data" / "schema.json"), *cfg]) == 0
        if (root / "base" / "layout.txt").exists():
            break
    else:
        pytest.skip("no valid base layout found")
    rc = main(["regen", "--seed", "5", "--out", str(root / "regen"),
               "--checkpoint", str(root / "model" / "model.ckpt"),
               "--schema", str(root / "data" / "schema.json"),
               "--base", str(root / "base" / "layout.txt"),
               "--region", "1,1,3,2", "--prompt", "high sequestered carbon", *cfg])
    assert rc == 0
    result = json.loads((root / "regen" / "result.json").read_text())
    if result["validity"]:
        from siteforge.wfc import parse_layout

        base = parse_layout((root / "base" / "layout.txt").read_text())
        new = np.array(result["detailed"]["tiles"])
        mask = np.ones((6, 5), dtype=bool)
        mask[1:4, 1:3] = False
        assert np.array_equal(new[mask], base[mask])


def test_sweep_and_compare(workspace):
    root, cfg = workspace
    assert main(["sweep", "--n", "1", "--seed", "11", "--out", str(root / "sweep"),
                 "--checkpoint", str(root / "model" / "model.ckpt"),
                 "--schema", str(root / "data" / "schema.json"), *cfg]) == 0
    report = json.loads((root / "sweep" / "report.json").read_text())
    total = sum(report["counts"][f][lv]["generations"]
                for f in report["counts"] for lv in report["counts"][f])
    assert total == 243 * 5  # each generation counted once per feature
    raw = (root / "sweep" / "raw.jsonl").read_text().splitlines()
    assert len(raw) == 243
    assert (root / "sweep" / "report.csv").exists()

    assert main(["compare", "--out", str(root / "cmp"),
                 "--a", str(root / "sweep" / "report.json"),
                 "--b", str(root / "sweep" / "report.json")]) == 0
    comp = json.loads((root / "cmp" / "comparison.json").read_text())
    assert comp["mean_validity"][0] == comp["mean_validity"][1]
    assert (root / "cmp" / "comparison.txt").exists()


def test_report_dist(workspace):
    root, cfg = workspace
    assert main(["report-dist", "--out", str(root / "dist"),
                 "--dataset", str(root / "data" / "dataset_0.jsonl"), *cfg]) == 0
    dist = json.loads((root / "dist" / "distribution.json").read_text())
    assert set(dist["ginis"]) == {
        "num_parks", "largest_park", "total_units", "carbon", "privacy", "performance"
    }


def test_hash_mismatch_exits_3(workspace, tmp_path):
    root, cfg = workspace
    # a schema the checkpoint was not trained against
    bad_schema = tmp_path / "schema.json"
    schema = json.loads((root / "data" / "schema.json").read_text())
    schema["cuts"]["num_parks"] = [0.0, 999.0]
    bad_schema.write_text(json.dumps(schema))
    rc = main(["generate", "--seed", "1", "--out", str(tmp_path / "out"),
               "--checkpoint", str(root / "model" / "model.ckpt"),
               "--schema", str(bad_schema), *cfg])
    assert rc == 3


def test_unknown_flag_exits_2(workspace, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--no-such-flag"])
    assert exc.value.code == 2


def test_manifests_written_everywhere(workspace):
    root, _ = workspace
    for sub in ("qd", "sample", "data", "model", "gen1", "sweep", "cmp", "dist"):
        manifest = json.loads((root / sub / "manifest.json").read_text())
        assert manifest["command"]
        assert "outputs" in manifest
        for out in manifest["outputs"]:
            assert Path(out).exists()
