import json
from fractions import Fraction

import numpy as np
import pytest

from oracles import gini_sorted
from siteforge.dataset import (
    DatasetError,
    DatasetRecord,
    LabelSchema,
    all_label_tuples,
    build_dataset,
    detokenize,
    distribution_report,
    fit_schema,
    gini,
    labels_to_prompt,
    load_dataset,
    parse_prompt,
    tokenize,
)
from siteforge.features import FeatureConfig
from siteforge.qd import sample_wfc_baseline


# ------------------------------------------------------------------- schema


def test_fit_schema_uniform_1_to_99():
    rows = np.tile(np.arange(1.0, 100.0).reshape(-1, 1), (1, 5))
    schema = fit_schema(rows)
    for lo, hi in schema.cuts:
        assert (lo, hi) == (33.0, 66.0)


def test_fit_schema_constant_feature_bins_mid():
    rows = np.ones((40, 5)) * 7.0
    schema = fit_schema(rows)
    assert schema.cuts[0] == (7.0, 7.0)
    assert schema.bin_value(0, 7.0) == "mid"
    assert schema.bin_value(0, 6.9) == "low"
    assert schema.bin_value(0, 7.1) == "high"


def test_fit_schema_order_independent():
    rng = np.random.Generator(np.random.Philox(key=5))
    rows = rng.random((100, 5)) * 40
    s1 = fit_schema(rows)
    s2 = fit_schema(rows[rng.permutation(100)])
    assert s1.cuts == s2.cuts


def test_fit_schema_needs_thirty():
    with pytest.raises(DatasetError):
        fit_schema(np.ones((29, 5)))


def test_schema_roundtrip_and_hash():
    rows = np.arange(150.0).reshape(30, 5)
    schema = fit_schema(rows, provenance=("a", "b"))
    again = LabelSchema.from_dict(schema.to_dict())
    assert again == schema
    assert again.content_hash() == schema.content_hash()


# ----------------------------------------------------------------- tokenize


def test_tokenize_all_empty(catalog):
    grid = np.full((2, 2), catalog.by_name["empty"].id)
    assert tokenize(grid, catalog) == "<GGGG>"


def test_tokenize_length_law(catalog, rules):
    for e in sample_wfc_baseline(5, 3, catalog, rules, 6, 9):
        assert len(tokenize(e.layout, catalog)) == 6 * 9 + 2


def test_detokenize_roundtrip_category_level(catalog, rules):
    for e in sample_wfc_baseline(100, 8, catalog, rules, 6, 7, restarts=3):
        toks = tokenize(e.layout, catalog)
        cats = detokenize(toks, 6, 7)
        assert np.array_equal(cats, catalog.categories[e.layout])


def test_detokenize_rejects_bad_shape():
    with pytest.raises(DatasetError):
        detokenize("<GG>", 2, 2)


def test_detokenize_rejects_bad_chars():
    with pytest.raises(DatasetError):
        detokenize("<GZGG>", 2, 2)


# ------------------------------------------------------------------ prompts


def test_all_low_prompt_canonical():
    assert labels_to_prompt(("low",) * 5) == (
        "low number of parks, low largest park, low total units, "
        "low sequestered carbon, low privacy"
    )


def test_243_distinct_prompts():
    tuples = all_label_tuples()
    assert len(tuples) == 243
    prompts = {labels_to_prompt(t) for t in tuples}
    assert len(prompts) == 243


def test_prompt_roundtrip_all_243():
    for t in all_label_tuples():
        assert parse_prompt(labels_to_prompt(t)) == t


def test_parse_prompt_rejects_noncanonical():
    with pytest.raises(DatasetError):
        parse_prompt("many parks, low largest park, low total units, "
                     "low sequestered carbon, low privacy")


# --------------------------------------------------------------------- gini


def test_gini_uniform_zero():
    assert gini([10, 10, 10]) == 0.0


def test_gini_concentrated_exact():
    assert gini([30, 0, 0]) == 2 / 3
    assert Fraction(2, 3) == Fraction(120, 180)


def test_gini_matches_sorted_oracle():
    rng = np.random.Generator(np.random.Philox(key=44))
    for _ in range(300):
        n = int(rng.integers(2, 30))
        counts = rng.integers(0, 100, size=n)
        if counts.sum() == 0:
            counts[0] = 1
        assert gini(counts) == pytest.approx(gini_sorted(counts), abs=1e-9)


def test_gini_rejects_all_zero():
    with pytest.raises(ValueError):
        gini([0, 0, 0])


def test_gini_in_unit_interval():
    rng = np.random.Generator(np.random.Philox(key=45))
    for _ in range(100):
        counts = rng.integers(0, 1000, size=10)
        if counts.sum() == 0:
            counts[0] = 1
        assert 0.0 <= gini(counts) <= 1.0


# ------------------------------------------------------------ build_dataset


def test_build_dataset_empty_ok(catalog, tmp_path):
    schema = LabelSchema(((0.0, 1.0),) * 5)
    report = build_dataset([], schema, catalog, 6, 7, FeatureConfig(), tmp_path / "d.jsonl")
    records, meta = load_dataset(tmp_path / "d.jsonl")
    assert records == []
    assert meta["records"] == 0


def test_build_dataset_records_and_audit(catalog, rules, tmp_path):
    designs = sample_wfc_baseline(60, 5, catalog, rules, 6, 7)
    rows = np.array([e.features.as_array() for e in designs])
    schema = fit_schema(rows)
    path = tmp_path / "d.jsonl"
    build_dataset(designs, schema, catalog, 6, 7, FeatureConfig(), path, dataset_id="t")
    records, meta = load_dataset(path)
    assert len(records) == 60
    assert meta["catalog_hash"] == catalog.content_hash()
    # label re-derivation audit: labels must equal bin(features, schema)
    loaded_schema = LabelSchema.from_dict(meta["label_schema"])
    for rec in records:
        assert rec.labels == loaded_schema.bin_features(rec.features)
        assert rec.prompt == labels_to_prompt(rec.labels)
        assert len(rec.tokens) == 6 * 7 + 2


def test_build_dataset_rejects_wrong_shape(catalog, rules, tmp_path):
    good = sample_wfc_baseline(35, 5, catalog, rules, 6, 7)
    bad = sample_wfc_baseline(3, 6, catalog, rules, 5, 5)
    rows = np.array([e.features.as_array() for e in good])
    schema = fit_schema(rows)
    path = tmp_path / "d.jsonl"
    build_dataset(good + bad, schema, catalog, 6, 7, FeatureConfig(), path)
    records, meta = load_dataset(path)
    assert len(records) == 35
    assert meta["rejected"] == 3


def test_record_json_roundtrip(catalog, rules):
    e = sample_wfc_baseline(1, 9, catalog, rules, 6, 7)[0]
    schema = LabelSchema(((0.0, 10.0), (0.0, 20.0), (0.0, 3.0), (0.0, 100.0), (0.3, 0.8)))
    labels = schema.bin_features(e.features)
    rec = DatasetRecord(tokenize(e.layout, catalog), e.features, labels, labels_to_prompt(labels))
    again = DatasetRecord.from_json(rec.to_json())
    assert again == rec


def test_distribution_report_shape(catalog, rules):
    designs = sample_wfc_baseline(40, 15, catalog, rules, 6, 7)
    feats = np.array([e.features.as_array() for e in designs])
    perfs = np.array([e.performance for e in designs])
    report = distribution_report(feats, perfs, 6, 7, FeatureConfig())
    assert set(report.histograms) == {
        "num_parks", "largest_park", "total_units", "carbon", "privacy", "performance"
    }
    for name, hist in report.histograms.items():
        assert len(hist) == 10
        assert sum(hist) == 40
        assert 0.0 <= report.ginis[name] <= 1.0
