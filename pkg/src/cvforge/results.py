"""Stable JSON serialization of cross-validation results (schema version 1)."""

from __future__ import annotations

import json
from pathlib import Path

from .cv import CVResult, CVScheme, Fold, Prediction, ScoreRecord, index_hash
from .errors import DataError

SCHEMA_VERSION = 1


def result_to_dict(result: CVResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config_echo": result.config_echo,
        "problem_type": result.problem_type,
        "features": list(result.features),
        "target": result.target,
        "pipeline": result.pipeline,
        "cv": result.scheme.to_json(),
        "metrics": list(result.metrics),
        "seed": result.seed,
        "n_samples": result.n_samples,
        "fold_plan": [
            {
                "repeat": f.repeat,
                "fold": f.fold,
                "train_idx_hash": f.train_hash,
                "test_idx": list(f.test),
                "n_train": f.n_train,
                "n_test": f.n_test,
            }
            for f in result.folds
        ],
        "scores": [{"repeat": s.repeat, "fold": s.fold, "metric": s.metric, "value": s.value} for s in result.scores],
        "chosen_params": list(result.chosen_params),
        "predictions": [
            {"index": p.index, "repeat": p.repeat, "fold": p.fold, "y_true": p.y_true, "y_pred": p.y_pred}
            for p in result.predictions
        ],
        "warnings": list(result.warnings),
        "fitted_params": None if result.fitted_params is None else list(result.fitted_params),
    }


def dumps(result: CVResult) -> str:
    """Deterministic text: fixed key order, shortest round-trip float repr."""
    return json.dumps(result_to_dict(result), indent=1, allow_nan=False) + "\n"


def save_result(result: CVResult, path) -> None:
    Path(path).write_text(dumps(result), encoding="utf-8")


def _rebuild_fold(entry, n) -> Fold:
    test = tuple(entry["test_idx"])
    if any(not 0 <= i < n for i in test):
        raise DataError(f"fold {entry['repeat']}:{entry['fold']} has test indices outside [0, {n})")
    mask = [True] * n
    for i in test:
        mask[i] = False
    train = tuple(i for i in range(n) if mask[i])
    if index_hash(train) != entry["train_idx_hash"]:
        raise DataError(f"fold {entry['repeat']}:{entry['fold']} training indices do not match their hash")
    if len(train) != entry["n_train"] or len(test) != entry["n_test"]:
        raise DataError(f"fold {entry['repeat']}:{entry['fold']} sizes do not match the stored counts")
    return Fold(entry["repeat"], entry["fold"], train, test)


def result_from_dict(d: dict) -> CVResult:
    if not isinstance(d, dict) or d.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unsupported result schema version {d.get('schema_version') if isinstance(d, dict) else None!r}")
    try:
        n = d["n_samples"]
        folds = tuple(_rebuild_fold(e, n) for e in d["fold_plan"])
        sizes = {(f.repeat, f.fold): (f.n_train, f.n_test) for f in folds}
        scores = tuple(
            ScoreRecord(s["repeat"], s["fold"], s["metric"], s["value"], *sizes[(s["repeat"], s["fold"])])
            for s in d["scores"]
        )
        fitted = d["fitted_params"]
        return CVResult(
            problem_type=d["problem_type"],
            features=tuple(d["features"]),
            target=d["target"],
            pipeline=d["pipeline"],
            scheme=CVScheme.from_json(d["cv"]),
            metrics=tuple(d["metrics"]),
            seed=d["seed"],
            n_samples=n,
            folds=folds,
            scores=scores,
            predictions=tuple(Prediction(**p) for p in d["predictions"]),
            chosen_params=tuple(d["chosen_params"]),
            warnings=tuple(d["warnings"]),
            fitted_params=None if fitted is None else tuple(fitted),
            config_echo=d["config_echo"],
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed result file: {exc}") from exc


def load_result(path) -> CVResult:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc
    return result_from_dict(d)
