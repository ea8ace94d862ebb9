"""Fold plans, nested grid-search tuning and cross-validated evaluation."""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, CVForgeError, DataError, FoldError
from .model import CLASSIFICATION, REGRESSION
from .numerics import RngStream
from .pipeline import FittedPipeline, PipelineSpec, fit_pipeline, label_text, pipeline_predict, prepare_target
from .score import get_metric
from .table import FeatureTypeMap, Table

SCHEME_KINDS = ("kfold", "repeated_kfold", "stratified_kfold", "group_kfold", "leave_one_out")

DEFAULT_SCORING = {REGRESSION: ("neg_mean_absolute_error",), CLASSIFICATION: ("accuracy",)}


@dataclass(frozen=True)
class CVScheme:
    """How to split: ``kind`` plus ``k``, ``repeats``, ``shuffle`` and ``group`` as relevant."""

    kind: str = "kfold"
    k: int = 5
    repeats: int = 1
    shuffle: bool = False
    group: str | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ConfigError(f"unknown cv scheme {self.kind!r}")
        if self.kind != "leave_one_out" and (not isinstance(self.k, int) or self.k < 2):
            raise ConfigError(f"k must be an integer >= 2, got {self.k!r}")
        if not isinstance(self.repeats, int) or self.repeats < 1:
            raise ConfigError(f"repeats must be an integer >= 1, got {self.repeats!r}")
        if self.kind != "repeated_kfold" and self.repeats != 1:
            raise ConfigError("repeats is only valid for repeated_kfold")
        if self.kind == "group_kfold" and not self.group:
            raise ConfigError("group_kfold needs a group column")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind != "leave_one_out":
            out["k"] = self.k
        if self.kind == "repeated_kfold":
            out["repeats"] = self.repeats
        if self.kind in ("kfold", "stratified_kfold"):
            out["shuffle"] = self.shuffle
        if self.kind == "group_kfold":
            out["group"] = self.group
        return out

    @classmethod
    def from_json(cls, d) -> CVScheme:
        return cls(**d)


@dataclass(frozen=True)
class Fold:
    repeat: int
    fold: int
    train: tuple[int, ...]
    test: tuple[int, ...]

    @property
    def n_train(self):
        return len(self.train)

    @property
    def n_test(self):
        return len(self.test)

    @property
    def train_hash(self) -> str:
        return index_hash(self.train)


def index_hash(indices) -> str:
    return hashlib.sha256(",".join(map(str, indices)).encode()).hexdigest()


def _complement(n, test):
    mask = np.ones(n, dtype=bool)
    mask[list(test)] = False
    return tuple(int(i) for i in np.flatnonzero(mask))


def _contiguous(order, k, repeat):
    n = len(order)
    sizes = [n // k + (1 if j < n % k else 0) for j in range(k)]
    folds, start = [], 0
    for j, size in enumerate(sizes):
        test = tuple(sorted(int(i) for i in order[start : start + size]))
        folds.append(Fold(repeat, j, _complement(n, test), test))
        start += size
    return folds


def make_splits(scheme: CVScheme, n: int, y=None, groups=None, rng: RngStream | None = None) -> list[Fold]:
    """Concrete (repeat, fold, train, test) index sets for ``n`` samples."""
    rng = rng or RngStream()
    kind, k = scheme.kind, scheme.k
    if kind == "leave_one_out":
        if n < 2:
            raise DataError("leave_one_out needs at least 2 samples")
        return [Fold(0, i, _complement(n, (i,)), (i,)) for i in range(n)]
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} samples")

    if kind == "kfold":
        order = rng.split(0).draws().permutation(n) if scheme.shuffle else np.arange(n)
        return _contiguous(order, k, 0)

    if kind == "repeated_kfold":
        folds = []
        for r in range(scheme.repeats):
            folds.extend(_contiguous(rng.split(r).draws().permutation(n), k, r))
        return folds

    if kind == "stratified_kfold":
        if y is None:
            raise DataError("stratified_kfold needs class labels")
        labels = np.array([label_text(v) for v in y], dtype=object)
        if len(labels) != n:
            raise DataError("labels do not match the number of samples")
        draws = rng.split(0).draws()
        sequence = []
        for c in sorted(set(labels.tolist())):
            members = np.flatnonzero(labels == c)
            if len(members) < k:
                raise DataError(f"class {c!r} has {len(members)} members, fewer than k={k}")
            if scheme.shuffle:
                members = members[draws.permutation(len(members))]
            sequence.extend(int(i) for i in members)
        # dealing one class after another round-robin keeps every class and
        # every fold within one sample of its share
        buckets = [[] for _ in range(k)]
        for pos, i in enumerate(sequence):
            buckets[pos % k].append(i)
        return [Fold(0, j, _complement(n, tuple(sorted(b))), tuple(sorted(b))) for j, b in enumerate(buckets)]

    # group_kfold
    if groups is None:
        raise DataError("group_kfold needs group labels")
    keys = np.array([label_text(v) for v in groups], dtype=object)
    if len(keys) != n:
        raise DataError("group labels do not match the number of samples")
    unique = sorted(set(keys.tolist()))
    if len(unique) < k:
        raise DataError(f"cannot make {k} folds from {len(unique)} groups")
    sizes = {g: int(np.sum(keys == g)) for g in unique}
    loads = [0] * k
    assignment = {}
    for g in sorted(unique, key=lambda g: (-sizes[g], g)):
        j = int(np.argmin(loads))
        assignment[g] = j
        loads[j] += sizes[g]
    folds = []
    for j in range(k):
        test = tuple(int(i) for i in np.flatnonzero([assignment[g] == j for g in keys]))
        folds.append(Fold(0, j, _complement(n, test), test))
    return folds


# ---------------------------------------------------------------------------
# Tuning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TuningConfig:
    inner: CVScheme | None = None
    objective: str | None = None


def default_inner_scheme(problem_type) -> CVScheme:
    if problem_type == CLASSIFICATION:
        return CVScheme("stratified_kfold", k=5)
    return CVScheme("kfold", k=5)


class TuneResult(NamedTuple):
    spec: PipelineSpec
    table: list[dict]
    pipeline: FittedPipeline


def _json_combo(combo):
    from .transform import param_to_json

    return {s: {p: param_to_json(v) for p, v in ps.items()} for s, ps in combo.items()}


def tune_grid(
    spec: PipelineSpec,
    train: Table,
    features: Sequence[str],
    target: str,
    types: FeatureTypeMap | None = None,
    inner: CVScheme | None = None,
    objective: str | None = None,
    rng: RngStream | None = None,
) -> TuneResult:
    """Exhaustive grid search by inner CV on ``train`` only, then refit the winner.

    Ties go to the first grid point in declaration order.  A grid of size 1
    skips the inner CV entirely.
    """
    rng = rng or RngStream()
    types = types or FeatureTypeMap()
    objective = objective or DEFAULT_SCORING[spec.problem_type][0]
    metric = get_metric(objective, spec.problem_type)
    table = []
    if spec.grid_size == 1:
        resolved = spec.resolve()
    else:
        inner = inner or default_inner_scheme(spec.problem_type)
        y = prepare_target(train, target, spec.problem_type)
        groups = train[inner.group] if inner.kind == "group_kfold" else None
        inner_folds = make_splits(inner, train.n_rows, y, groups, rng.split(0))
        best, best_score = None, -np.inf
        for combo in spec.combinations():
            candidate = spec.resolve(combo)
            scores = []
            for j, f in enumerate(inner_folds):
                fp = fit_pipeline(candidate, train.take(f.train), features, target, types, rng.split(2).split(j))
                test = train.take(f.test)
                scores.append(metric.func(y[list(f.test)], pipeline_predict(fp, test)))
            mean = float(np.mean(scores))
            table.append({"params": _json_combo(combo), "mean_score": mean, "fold_scores": scores})
            if mean > best_score:
                best, best_score = candidate, mean
        resolved = best
    return TuneResult(resolved, table, fit_pipeline(resolved, train, features, target, types, rng.split(1)))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreRecord:
    repeat: int
    fold: int
    metric: str
    value: float
    n_train: int
    n_test: int


@dataclass(frozen=True)
class Prediction:
    index: int
    repeat: int
    fold: int
    y_true: Any
    y_pred: Any


@dataclass(frozen=True)
class CVResult:
    """Everything a cross-validation run produced.

    ``fitted_params`` holds per-fold parameter snapshots and ``pipelines`` the
    fitted pipelines themselves; both are only kept when requested.
    """

    problem_type: str
    features: tuple[str, ...]
    target: str
    pipeline: list
    scheme: CVScheme
    metrics: tuple[str, ...]
    seed: int
    n_samples: int
    folds: tuple[Fold, ...]
    scores: tuple[ScoreRecord, ...]
    predictions: tuple[Prediction, ...]
    chosen_params: tuple[dict, ...]
    warnings: tuple[str, ...] = ()
    fitted_params: tuple[dict, ...] | None = None
    config_echo: dict | None = None
    pipelines: tuple[FittedPipeline, ...] | None = field(default=None, compare=False, repr=False)

    def fold_scores(self, metric: str) -> np.ndarray:
        if metric not in self.metrics:
            raise KeyError(f"metric {metric!r} not in result (have {list(self.metrics)})")
        return np.array([r.value for r in self.scores if r.metric == metric])

    def mean(self, metric: str) -> float:
        return float(np.mean(self.fold_scores(metric)))

    def std(self, metric: str) -> float:
        s = self.fold_scores(metric)
        return float(np.std(s, ddof=1)) if s.size > 1 else 0.0

    def fold_meta(self) -> list[tuple[int, int, int, int]]:
        return [(f.repeat, f.fold, f.n_train, f.n_test) for f in self.folds]

    @property
    def retained(self) -> bool:
        return self.fitted_params is not None


class _FoldTask(NamedTuple):
    data: Table
    features: tuple
    target: str
    types: FeatureTypeMap
    spec: PipelineSpec
    fold: Fold
    metrics: tuple
    tuning: TuningConfig
    rng: RngStream
    retain: bool
    keep_pipeline: bool


class _FoldOutcome(NamedTuple):
    scores: list
    y_pred: np.ndarray
    chosen: dict
    inner: list
    warnings: list
    summary: dict | None
    pipeline: FittedPipeline | None


def _run_fold(task: _FoldTask) -> _FoldOutcome:
    f = task.fold
    try:
        train = task.data.take(f.train)
        test = task.data.take(f.test)
        tuned = tune_grid(
            task.spec, train, task.features, task.target, task.types,
            task.tuning.inner, task.tuning.objective or task.metrics[0], task.rng,
        )
        fp = tuned.pipeline
        y_true = prepare_target(test, task.target, task.spec.problem_type)
        y_pred = pipeline_predict(fp, test)
        scores = [get_metric(m).func(y_true, y_pred) for m in task.metrics]
    except CVForgeError as exc:
        raise FoldError(f.repeat, f.fold, str(exc)) from exc
    return _FoldOutcome(
        scores,
        y_pred,
        fp.chosen_params(),
        tuned.table,
        fp.warnings,
        fp.summary() if task.retain else None,
        fp if task.keep_pipeline else None,
    )


def run_cross_validation(
    data: Table,
    features: Sequence[str],
    target: str,
    types: FeatureTypeMap | None = None,
    spec: PipelineSpec | None = None,
    scheme: CVScheme | None = None,
    scoring: Sequence[str] | None = None,
    tuning: TuningConfig | None = None,
    seed: int = 0,
    retain: bool = False,
    jobs: int = 1,
    keep_pipelines: bool | None = None,
) -> CVResult:
    """Estimate generalisation performance of ``spec`` by (nested) cross-validation.

    Every fold tunes (when grids are declared), fits and scores on its own
    training rows only.  Fold seeds derive from ``seed`` by position in the
    fold plan, so results do not depend on ``jobs``.

    Parameters
    ----------
    data : Table
        All rows, including target and any grouping columns.
    features : sequence of str
        Feature columns; the target may not be among them.
    target : str
        Target column.
    types : FeatureTypeMap, optional
        Feature type assignments; unassigned features are continuous.
    spec : PipelineSpec
        Pipeline to evaluate.
    scheme : CVScheme, optional
        Outer splitting strategy, 5-fold by default.
    scoring : sequence of str, optional
        Metric names; the first is also the tuning objective.
    tuning : TuningConfig, optional
        Inner CV scheme and objective for grid search.
    seed : int
        Root seed for splits and stochastic models.
    retain : bool
        Keep per-fold fitted-parameter snapshots (and pipelines) for inspection.
    jobs : int
        Worker processes for fold evaluation.
    """
    if spec is None:
        raise ConfigError("a pipeline spec is required")
    types = types or FeatureTypeMap()
    scheme = scheme or CVScheme()
    tuning = tuning or TuningConfig()
    metrics = tuple(scoring or DEFAULT_SCORING[spec.problem_type])
    for m in metrics:
        get_metric(m, spec.problem_type)
    if tuning.objective:
        get_metric(tuning.objective, spec.problem_type)
    spec.model_step
    features = tuple(features)
    from .pipeline import check_features

    check_features(data, features, target, types)
    y = prepare_target(data, target, spec.problem_type)
    if scheme.kind == "group_kfold":
        if scheme.group not in data:
            raise DataError(f"group column {scheme.group!r} not found")
        if scheme.group in features or scheme.group == target:
            raise ConfigError("the group column must be neither a feature nor the target")
    groups = data[scheme.group] if scheme.kind == "group_kfold" else None
    root = RngStream(seed)
    folds = make_splits(scheme, data.n_rows, y, groups, root.split(0))
    keep = retain if keep_pipelines is None else keep_pipelines
    tasks = [
        _FoldTask(data, features, target, types, spec, f, metrics, tuning, root.split(1).split(i), retain, keep)
        for i, f in enumerate(folds)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, tasks))
    else:
        outcomes = [_run_fold(t) for t in tasks]

    scores, predictions, chosen, warnings = [], [], [], []
    for f, out in zip(folds, outcomes):
        for m, v in zip(metrics, out.scores):
            scores.append(ScoreRecord(f.repeat, f.fold, m, float(v), f.n_train, f.n_test))
        for i, p in zip(f.test, out.y_pred):
            yt = y[i]
            predictions.append(
                Prediction(
                    int(i), f.repeat, f.fold,
                    float(yt) if spec.problem_type == REGRESSION else str(yt),
                    float(p) if spec.problem_type == REGRESSION else str(p),
                )
            )
        chosen.append({"repeat": f.repeat, "fold": f.fold, "params": out.chosen, "inner_cv": out.inner})
        warnings.extend(f"repeat {f.repeat}, fold {f.fold}: {w}" for w in out.warnings)
    return CVResult(
        problem_type=spec.problem_type,
        features=features,
        target=target,
        pipeline=spec.to_json(),
        scheme=scheme,
        metrics=metrics,
        seed=seed,
        n_samples=data.n_rows,
        folds=tuple(folds),
        scores=tuple(scores),
        predictions=tuple(predictions),
        chosen_params=tuple(chosen),
        warnings=tuple(warnings),
        fitted_params=tuple(
            {"repeat": f.repeat, "fold": f.fold, "steps": out.summary} for f, out in zip(folds, outcomes)
        ) if retain else None,
        pipelines=tuple(out.pipeline for out in outcomes) if keep else None,
    )
