"""Declarative pipelines: ordered, type-routed transformer steps and one model."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from . import model as models
from . import transform
from .errors import ConfigError, DataError, StepError
from .numerics import RngStream
from .table import CONTINUOUS, REMOVED_CONFOUND, ColumnSelector, FeatureTypeMap, Table
from .transform import TransformerSpec, param_to_json


@dataclass(frozen=True)
class Step:
    name: str
    kind: str
    params: Mapping[str, Any]
    apply_to: ColumnSelector
    grid: Mapping[str, tuple] = field(default_factory=dict)

    @property
    def is_model(self) -> bool:
        return self.kind in models.PARAMS

    def to_json(self) -> dict:
        out = {"name": self.name, "kind": self.kind}
        out["params"] = {k: param_to_json(v) for k, v in self.params.items()}
        if not self.is_model:
            out["apply_to"] = self.apply_to.to_json()
        if self.grid:
            out["grid"] = {k: [param_to_json(v) for v in vs] for k, vs in self.grid.items()}
        return out


def _check(kind, param, value):
    if kind in models.PARAMS:
        return models.check_param(kind, param, value)
    return transform.check_param(kind, param, value)


@dataclass(frozen=True)
class PipelineSpec:
    """Immutable pipeline declaration; build it with :meth:`add`.

    >>> spec = (PipelineSpec("regression")
    ...         .add("zscore")
    ...         .add("ridge", grid={"alpha": [0.1, 1.0, 10.0]}))
    >>> spec.grid_size
    3
    """

    problem_type: str
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        if self.problem_type not in models.PROBLEM_TYPES:
            raise ConfigError(f"unknown problem type {self.problem_type!r}")

    def add(self, kind, *, name=None, apply_to=CONTINUOUS, grid=None, **params) -> PipelineSpec:
        return add_step(self, kind, params, apply_to=apply_to, grid=grid, name=name)

    @property
    def model_step(self) -> Step:
        if not self.steps or not self.steps[-1].is_model:
            raise ConfigError("pipeline has no model step")
        return self.steps[-1]

    @property
    def transformer_steps(self) -> tuple[Step, ...]:
        return tuple(s for s in self.steps if not s.is_model)

    def step(self, name) -> Step:
        for s in self.steps:
            if s.name == name:
                return s
        raise ConfigError(f"unknown step {name!r}")

    def grid_items(self) -> list[tuple[str, str, tuple]]:
        """(step, param, candidates) in declaration order."""
        return [(s.name, p, vs) for s in self.steps for p, vs in s.grid.items()]

    @property
    def grid_size(self) -> int:
        size = 1
        for _, _, vs in self.grid_items():
            size *= len(vs)
        return size

    def combinations(self) -> list[dict[str, dict[str, Any]]]:
        """Every grid point as ``{step: {param: value}}``, last parameter varying fastest."""
        items = self.grid_items()
        out = []
        for values in itertools.product(*(vs for _, _, vs in items)):
            combo: dict[str, dict[str, Any]] = {}
            for (step, param, _), v in zip(items, values):
                combo.setdefault(step, {})[param] = v
            out.append(combo)
        return out

    def resolve(self, chosen: Mapping[str, Mapping[str, Any]] | None = None) -> PipelineSpec:
        """Fold grids into scalar params; ``chosen`` picks values for multi-valued grids."""
        chosen = chosen or {}
        steps = []
        for s in self.steps:
            params = dict(s.params)
            for p, vs in s.grid.items():
                if s.name in chosen and p in chosen[s.name]:
                    params[p] = chosen[s.name][p]
                elif len(vs) == 1:
                    params[p] = vs[0]
                else:
                    raise ConfigError(f"no value chosen for grid {s.name}.{p}")
            steps.append(replace(s, params=params, grid={}))
        return replace(self, steps=tuple(steps))

    @property
    def model_spec(self) -> models.ModelSpec:
        s = self.model_step
        return models.ModelSpec(s.kind, self.problem_type, s.params)

    def to_json(self) -> list[dict]:
        return [s.to_json() for s in self.steps]


def add_step(spec: PipelineSpec, kind, params=None, apply_to=CONTINUOUS, grid=None, name=None) -> PipelineSpec:
    """Append a transformer or model step.

    A scalar in ``params`` is equivalent to a singleton entry in ``grid``.
    """
    params = dict(params or {})
    grid = dict(grid or {})
    if spec.steps and spec.steps[-1].is_model:
        raise ConfigError("model must be final step")
    if kind in models.PARAMS:
        if spec.problem_type not in models.VALID_FOR[kind]:
            raise ConfigError(f"model {kind!r} does not support {spec.problem_type}")
        schema = models.PARAMS[kind]
    elif kind in transform.PARAMS:
        schema = transform.PARAMS[kind]
    else:
        raise ConfigError(f"unknown step kind {kind!r}")
    both = sorted(set(params) & set(grid))
    if both:
        raise ConfigError(f"parameters given both as value and grid: {both}")
    checked = {p: _check(kind, p, v) for p, v in params.items()}
    checked_grid = {}
    for p, values in grid.items():
        if isinstance(values, (str, bytes)) or not hasattr(values, "__iter__"):
            values = [values]
        values = list(values)
        if not values:
            raise ConfigError(f"empty hyperparameter grid for {kind}.{p}")
        checked_grid[p] = tuple(_check(kind, p, v) for v in values)
    full = {p: check(default) for p, (default, check) in schema.items()}
    full.update(checked)
    for p in checked_grid:
        full.pop(p, None)
    taken = {s.name for s in spec.steps}
    if name is None:
        name = kind
        i = 1
        while name in taken:
            name = f"{kind}_{i}"
            i += 1
    elif name in taken:
        raise ConfigError(f"duplicate step name {name!r}")
    step = Step(name, kind, full, ColumnSelector.parse(apply_to), checked_grid)
    return replace(spec, steps=spec.steps + (step,))


# ---------------------------------------------------------------------------
# Fitting and applying
# ---------------------------------------------------------------------------


def label_text(v) -> str:
    if isinstance(v, (float, np.floating)) and float(v).is_integer():
        return str(int(v))
    return str(v)


def prepare_target(data: Table, target: str, problem_type: str) -> np.ndarray:
    if target not in data:
        raise DataError(f"target column {target!r} not found")
    y = data[target]
    if problem_type == models.REGRESSION:
        if not data.is_numeric(target):
            raise DataError(f"regression target {target!r} must be numeric")
        return y
    return np.array([label_text(v) for v in y], dtype=object)


def check_features(data: Table, features: Sequence[str], target: str, types: FeatureTypeMap) -> None:
    if not features:
        raise ConfigError("no feature columns given")
    missing = [f for f in features if f not in data]
    if missing:
        raise DataError(f"feature columns not found in data: {missing}")
    if target in features:
        raise ConfigError(f"target {target!r} must not be a feature")
    if len(set(features)) != len(features):
        raise ConfigError("duplicate feature columns")
    types.validate(features)


def model_columns(X: Table, types: FeatureTypeMap) -> list[str]:
    cols = [c for c in X.column_names if types.type_of(c) != REMOVED_CONFOUND]
    bad = [c for c in cols if not X.is_numeric(c)]
    if bad:
        raise DataError(f"categorical columns reach the model: {bad}")
    if not cols:
        raise DataError("no feature columns reach the model")
    return cols


@dataclass(frozen=True)
class FittedPipeline:
    spec: PipelineSpec
    features: tuple[str, ...]
    types_in: FeatureTypeMap
    steps: tuple[tuple[str, Any], ...]
    types_after: tuple[FeatureTypeMap, ...]
    model_columns: tuple[str, ...]
    model: models.FittedModel

    @property
    def warnings(self) -> list[str]:
        return [w for _, f in self.steps for w in f.warnings]

    def chosen_params(self) -> dict[str, dict[str, Any]]:
        return {s.name: {k: param_to_json(v) for k, v in s.params.items()} for s in self.spec.steps}

    def summary(self) -> dict[str, dict]:
        out = {}
        for (name, fitted), s in zip(self.steps, self.spec.steps):
            out[name] = {"kind": s.kind, "params": self.chosen_params()[name], "fitted": fitted.summary()}
        m = self.spec.model_step
        out[m.name] = {
            "kind": m.kind,
            "params": self.chosen_params()[m.name],
            "fitted": self.model.summary(self.model_columns),
        }
        return out


def fit_pipeline(
    spec: PipelineSpec,
    data: Table,
    features: Sequence[str],
    target: str,
    types: FeatureTypeMap | None = None,
    rng: RngStream | None = None,
) -> FittedPipeline:
    """Fit every step in declaration order on ``data`` (the training rows)."""
    types = types or FeatureTypeMap()
    rng = rng or RngStream()
    if spec.grid_size > 1:
        raise ConfigError("pipeline has unresolved hyperparameter grids; tune it first")
    spec = spec.resolve()
    features = tuple(features)
    check_features(data, features, target, types)
    y = prepare_target(data, target, spec.problem_type)
    X = data.select(features)
    current = types
    fitted_steps, snapshots = [], []
    for s in spec.transformer_steps:
        try:
            fitted, X, current = TransformerSpec(s.kind, s.params, s.apply_to).fit(X, current, y, data)
        except (DataError, ConfigError) as exc:
            raise StepError(s.name, str(exc)) from exc
        fitted_steps.append((s.name, fitted))
        snapshots.append(current)
    m = spec.model_step
    try:
        cols = model_columns(X, current)
        fitted_model = models.fit(spec.model_spec, X.to_matrix(cols), y, rng.split(len(spec.steps) - 1))
    except (DataError, ConfigError) as exc:
        raise StepError(m.name, str(exc)) from exc
    return FittedPipeline(spec, features, types, tuple(fitted_steps), tuple(snapshots), tuple(cols), fitted_model)


def _apply(fp: FittedPipeline, data: Table, until=None) -> Table:
    missing = [f for f in fp.features if f not in data]
    if missing:
        raise DataError(f"missing input columns {missing}")
    X = data.select(fp.features)
    for name, fitted in fp.steps:
        try:
            X = fitted.transform(X)
        except DataError as exc:
            raise StepError(name, str(exc)) from exc
        if name == until:
            break
    return X


def pipeline_predict(fp: FittedPipeline, data: Table) -> np.ndarray:
    X = _apply(fp, data)
    return models.predict(fp.model, X.to_matrix(fp.model_columns))


def preprocess_until(fp: FittedPipeline, data: Table, step: str) -> Table:
    """The table as it leaves step ``step``."""
    names = [name for name, _ in fp.steps]
    if step == fp.spec.model_step.name:
        raise ConfigError("model step not preprocessable")
    if step not in names:
        raise ConfigError(f"unknown step {step!r}")
    return _apply(fp, data, until=step)


def types_until(fp: FittedPipeline, step: str) -> FeatureTypeMap:
    names = [name for name, _ in fp.steps]
    return fp.types_after[names.index(step)]
