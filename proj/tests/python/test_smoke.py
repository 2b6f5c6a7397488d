import csv
import itertools
import json

import pytest

import repscen

SMALL = {"n": 3, "m": 4}


def brute_force_phi(inst):
    """Best objective over every open pattern with capacities on a coarse grid."""
    best = float("inf")
    n = len(inst["c_f"])
    top = sum(max(row[j] for row in inst["demand"]) for j in range(n))
    grid = [top * k / 4 for k in range(5)]
    for b in itertools.product([0, 1], repeat=n):
        for v in itertools.product(grid, repeat=n):
            x = list(map(float, b)) + [vi if bi else 0.0 for vi, bi in zip(v, b)]
            try:
                best = min(best, repscen.evaluate_phi(inst, x))
            except repscen.Error:
                pass
    return best


def test_instance_roundtrip_and_features():
    inst = repscen.generate_instance(SMALL, seed=5)
    assert inst == repscen.generate_instance(SMALL, seed=5)
    assert inst != repscen.generate_instance(SMALL, seed=6)
    feats = repscen.extract_features(inst)
    assert len(feats) == 19 * 3 == len(repscen.feature_names(3))


def test_exact_solve_beats_grid():
    inst = repscen.generate_instance(SMALL, seed=2)
    sol = repscen.solve_exact(inst)
    assert sol["status"] == "optimal"
    assert sol["phi"] == pytest.approx(repscen.evaluate_phi(inst, sol["x"]))
    assert sol["phi"] <= brute_force_phi(inst) + 1e-6


def test_representative_search():
    inst = repscen.generate_instance(SMALL, seed=3)
    lab = repscen.find_representative(inst)
    assert lab["iterations"] >= 1
    assert len(lab["xi_star"]) == 3
    if lab["found"]:
        x = repscen.surrogate_decision(inst, lab["xi_star"])
        assert repscen.evaluate_phi(inst, x) <= 1.01 * lab["reference_phi"] + 1e-6


def test_config_errors():
    with pytest.raises(repscen.ConfigError):
        repscen.generate_instance({"bogus": 1})
    with pytest.raises(repscen.Error):
        repscen.config_hash({"jobs": 0})
    cfg = repscen.default_config()
    assert cfg["generator"]["n"] == 5
    assert repscen.config_hash(cfg) == repscen.config_hash(None)


def test_missing_artifact(tmp_path):
    with pytest.raises(repscen.ArtifactError):
        repscen.featurize(tmp_path)


def test_pipeline_run(tmp_path):
    cfg = {"generator": {"n": 3, "m": 5, "count": 12}, "training": {"ann": {"hidden": [8], "max_epochs": 20}}}
    repscen.run(tmp_path, cfg)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["stages"]) == 7
    with open(tmp_path / "results.csv") as f:
        rows = list(csv.DictReader(f))
    assert rows and {r["method"] for r in rows} >= {"GRB", "LR"}
    model = json.loads((tmp_path / "models" / "lr.json").read_text())
    with open(tmp_path / "dataset.csv") as f:
        first = next(csv.DictReader(f))
    feats = [float(first[name]) for name in repscen.feature_names(3)]
    assert len(repscen.predict(model, feats)) == 3
