"""Scoring metrics, all oriented so that higher is better."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, DataError
from .model import CLASSIFICATION, REGRESSION
from .numerics import _pearson


class Metric(NamedTuple):
    name: str
    problem_types: tuple[str, ...]
    func: Callable


def _regression_arrays(y_true, y_pred, min_len=1):
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size < min_len:
        raise DataError(f"at least {min_len} samples needed")
    return y_true, y_pred


def _label_arrays(y_true, y_pred):
    y_true = np.array([str(v) for v in y_true], dtype=object)
    y_pred = np.array([str(v) for v in y_pred], dtype=object)
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size < 1:
        raise DataError("at least 1 sample needed")
    return y_true, y_pred


def neg_mean_absolute_error(y_true, y_pred):
    y_true, y_pred = _regression_arrays(y_true, y_pred)
    return -float(np.mean(np.abs(y_true - y_pred)))


def neg_mean_squared_error(y_true, y_pred):
    y_true, y_pred = _regression_arrays(y_true, y_pred)
    return -float(np.mean((y_true - y_pred) ** 2))


def r2(y_true, y_pred):
    y_true, y_pred = _regression_arrays(y_true, y_pred, min_len=2)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise DataError("r2 is undefined for a constant y_true")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def pearson_r_score(y_true, y_pred):
    """Correlation of predictions with the truth.

    Constant ``y_true`` is an error; constant predictions carry no linear
    association and score 0.
    """
    y_true, y_pred = _regression_arrays(y_true, y_pred, min_len=2)
    if np.ptp(y_true) == 0.0:
        raise DataError("pearson_r_score is undefined for a constant y_true")
    if np.ptp(y_pred) == 0.0:
        return 0.0
    return _pearson(y_true, y_pred)


def accuracy(y_true, y_pred):
    y_true, y_pred = _label_arrays(y_true, y_pred)
    return float(np.mean(y_true == y_pred))


def balanced_accuracy(y_true, y_pred):
    y_true, y_pred = _label_arrays(y_true, y_pred)
    recalls = [float(np.mean(y_pred[y_true == c] == c)) for c in sorted(set(y_true.tolist()))]
    return float(np.mean(recalls))


METRICS = {
    m.name: m
    for m in [
        Metric("neg_mean_absolute_error", (REGRESSION,), neg_mean_absolute_error),
        Metric("neg_mean_squared_error", (REGRESSION,), neg_mean_squared_error),
        Metric("r2", (REGRESSION,), r2),
        Metric("pearson_r_score", (REGRESSION,), pearson_r_score),
        Metric("accuracy", (CLASSIFICATION,), accuracy),
        Metric("balanced_accuracy", (CLASSIFICATION,), balanced_accuracy),
    ]
}


def get_metric(name, problem_type=None) -> Metric:
    if name not in METRICS:
        raise ConfigError(f"unknown metric {name!r}")
    metric = METRICS[name]
    if problem_type is not None and problem_type not in metric.problem_types:
        raise ConfigError(f"metric {name!r} is not defined for {problem_type}")
    return metric


def score(metric, y_true, y_pred) -> float:
    if isinstance(metric, str):
        metric = get_metric(metric)
    return metric.func(y_true, y_pred)
