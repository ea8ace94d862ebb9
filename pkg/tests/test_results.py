import dataclasses
import json

import numpy as np
import pytest

from cvforge.cv import CVScheme, run_cross_validation
from cvforge.errors import DataError
from cvforge.pipeline import PipelineSpec
from cvforge.results import dumps, load_result, result_from_dict, save_result
from cvforge.table import FeatureTypeMap, Table


def mixed_result():
    rng = np.random.default_rng(0)
    n = 60
    dx = np.where(rng.random(n) < 0.5, "control", "patient")
    age = rng.normal(size=n)
    t = Table({
        "f0": rng.normal(size=n) + age, "f1": rng.normal(size=n), "age": age, "dx": dx,
    })
    spec = (
        PipelineSpec("classification")
        .add("zscore")
        .add("confound_remover", subgroup=("dx", "control"))
        .add("pca", retain=0.9)
        .add("logistic", grid={"alpha": [0.1, 10.0]})
    )
    r = run_cross_validation(
        t, ["f0", "f1", "age"], "dx", FeatureTypeMap({"confound": ["age"]}), spec,
        CVScheme("stratified_kfold", 3, shuffle=True), ["accuracy", "balanced_accuracy"], seed=5, retain=True,
    )
    return dataclasses.replace(r, config_echo={"note": "x"})


def test_round_trip_field_for_field(tmp_path):
    r = mixed_result()
    path = tmp_path / "r.json"
    save_result(r, path)
    back = load_result(path)
    assert back == r
    assert dumps(back) == path.read_text()


def test_schema_keys():
    d = json.loads(dumps(mixed_result()))
    for key in ("schema_version", "config_echo", "fold_plan", "scores", "chosen_params", "predictions", "warnings"):
        assert key in d
    assert set(d["fold_plan"][0]) == {"repeat", "fold", "train_idx_hash", "test_idx", "n_train", "n_test"}


def test_tampered_hash_is_rejected():
    d = json.loads(dumps(mixed_result()))
    d["fold_plan"][0]["test_idx"] = d["fold_plan"][0]["test_idx"][1:] + [d["fold_plan"][1]["test_idx"][0]]
    with pytest.raises(DataError, match="hash"):
        result_from_dict(d)


def test_bad_version():
    with pytest.raises(DataError, match="version"):
        result_from_dict({"schema_version": 99})
