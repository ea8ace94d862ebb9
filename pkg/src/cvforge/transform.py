"""Feature transformers fitted on training rows and applied to any rows.

Every transformer is split into a declarative :class:`TransformerSpec` and a
frozen fitted state whose ``transform`` only ever uses statistics learned at
fit time.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DataError
from .numerics import fit_linear, pearson_columns, pearson_p, sym_eigen
from .table import (
    CONFOUND,
    CONTINUOUS,
    REMOVED_CONFOUND,
    ColumnSelector,
    FeatureTypeMap,
    Table,
    resolve_selector,
)

ZERO_STD = 1e-12

KINDS = ("zscore", "variance_threshold", "pca", "confound_remover", "cbpm")


# ---------------------------------------------------------------------------
# Parameter schemas
# ---------------------------------------------------------------------------


def _is_number(v):
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


def _check_threshold(v):
    if not _is_number(v) or v < 0:
        raise ConfigError(f"threshold must be a number >= 0, got {v!r}")
    return float(v)


def _check_retain(v):
    if isinstance(v, bool):
        raise ConfigError(f"retain must be a fraction in (0, 1] or a positive integer, got {v!r}")
    if isinstance(v, numbers.Integral):
        if v < 1:
            raise ConfigError(f"retain must be a fraction in (0, 1] or a positive integer, got {v!r}")
        return int(v)
    if _is_number(v) and 0.0 < v <= 1.0:
        return float(v)
    raise ConfigError(f"retain must be a fraction in (0, 1] or a positive integer, got {v!r}")


def _check_selector(v):
    return ColumnSelector.parse(v)


def _check_subgroup(v):
    if v is None:
        return None
    if isinstance(v, Mapping) and set(v) == {"column", "value"}:
        v = (v["column"], v["value"])
    if isinstance(v, (list, tuple)) and len(v) == 2 and isinstance(v[0], str) and v[0]:
        return (v[0], str(v[1]))
    raise ConfigError(f"subgroup must be a (column, value) pair, got {v!r}")


def _check_bool(v):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true/false, got {v!r}")
    return v


def _check_alpha(v):
    if not _is_number(v) or not 0.0 < v < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {v!r}")
    return float(v)


def _enum(*choices):
    def check(v):
        if v not in choices:
            raise ConfigError(f"expected one of {list(choices)}, got {v!r}")
        return v

    return check


PARAMS: dict[str, dict[str, tuple[Any, Any]]] = {
    "zscore": {},
    "variance_threshold": {"threshold": (0.0, _check_threshold)},
    "pca": {"retain": (1.0, _check_retain)},
    "confound_remover": {
        "confounds": (CONFOUND, _check_selector),
        "subgroup": (None, _check_subgroup),
        "intercept": (True, _check_bool),
    },
    "cbpm": {
        "alpha": (0.01, _check_alpha),
        "sign": ("both", _enum("positive", "negative", "both")),
        "aggregation": ("sum", _enum("sum", "mean")),
    },
}


def check_param(kind, name, value):
    schema = PARAMS[kind]
    if name not in schema:
        raise ConfigError(f"{kind} has no parameter {name!r}")
    return schema[name][1](value)


def param_to_json(value):
    if isinstance(value, ColumnSelector):
        return value.to_json()
    if isinstance(value, tuple):
        return list(value)
    return value


@dataclass(frozen=True)
class TransformerSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    apply_to: ColumnSelector = ColumnSelector("by_type", (CONTINUOUS,))

    def __post_init__(self):
        if self.kind not in PARAMS:
            raise ConfigError(f"unknown transformer kind {self.kind!r}")
        schema = PARAMS[self.kind]
        full = {name: check(default) for name, (default, check) in schema.items()}
        for name, value in dict(self.params).items():
            full[name] = check_param(self.kind, name, value)
        object.__setattr__(self, "params", full)
        object.__setattr__(self, "apply_to", ColumnSelector.parse(self.apply_to))

    def fit(self, X: Table, types: FeatureTypeMap, y=None, side: Table | None = None):
        """Fit on training rows; returns ``(fitted, X_transformed, types_out)``."""
        fitted = _FITTERS[self.kind](self, X, types, y, side)
        return fitted, fitted.transform(X), fitted.update_types(types)


# ---------------------------------------------------------------------------
# Fitted states
# ---------------------------------------------------------------------------


class Fitted:
    kind: str
    columns_in: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def _inputs(self, X: Table) -> np.ndarray:
        missing = [c for c in self.columns_in if c not in X]
        if missing:
            raise DataError(f"{self.kind}: missing fit-time columns {missing}")
        return X.to_matrix(self.columns_in)

    def update_types(self, types: FeatureTypeMap) -> FeatureTypeMap:
        return types

    def summary(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FittedZScore(Fitted):
    columns_in: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    kind: str = "zscore"

    def transform(self, X: Table) -> Table:
        M = self._inputs(X)
        safe = np.where(self.std < ZERO_STD, 1.0, self.std)
        Z = np.where(self.std < ZERO_STD, 0.0, (M - self.mean) / safe)
        return X.with_columns({c: Z[:, j] for j, c in enumerate(self.columns_in)})

    def summary(self):
        return {
            "columns": list(self.columns_in),
            "mean": dict(zip(self.columns_in, map(float, self.mean))),
            "std": dict(zip(self.columns_in, map(float, self.std))),
        }


def _fit_zscore(spec, X, types, y, side):
    cols = tuple(resolve_selector(spec.apply_to, X, types))
    M = X.to_matrix(cols)
    if M.shape[0] < 2:
        raise DataError("zscore needs at least 2 training rows")
    return FittedZScore(cols, M.mean(axis=0), M.std(axis=0, ddof=1))


@dataclass(frozen=True)
class FittedVarianceThreshold(Fitted):
    columns_in: tuple[str, ...]
    threshold: float
    variance: np.ndarray
    kept: tuple[str, ...]
    kind: str = "variance_threshold"

    @property
    def dropped(self):
        return tuple(c for c in self.columns_in if c not in self.kept)

    def transform(self, X: Table) -> Table:
        self._inputs(X)
        return X.drop(self.dropped)

    def update_types(self, types):
        return types.without(self.dropped)

    def summary(self):
        return {
            "threshold": self.threshold,
            "kept": list(self.kept),
            "dropped": list(self.dropped),
            "variance": dict(zip(self.columns_in, map(float, self.variance))),
        }


def _fit_variance_threshold(spec, X, types, y, side):
    cols = tuple(resolve_selector(spec.apply_to, X, types))
    M = X.to_matrix(cols)
    if M.shape[0] < 2:
        raise DataError("variance_threshold needs at least 2 training rows")
    var = M.var(axis=0, ddof=1)
    threshold = spec.params["threshold"]
    kept = tuple(c for c, v in zip(cols, var) if v > threshold)
    if not kept:
        raise DataError("no features remain after variance threshold")
    return FittedVarianceThreshold(cols, threshold, var, kept)


@dataclass(frozen=True)
class FittedPCA(Fitted):
    columns_in: tuple[str, ...]
    mean: np.ndarray
    components: np.ndarray  # columns_in x n_components
    explained_variance: np.ndarray
    total_variance: float
    kind: str = "pca"

    @property
    def n_components(self):
        return self.components.shape[1]

    @property
    def columns_out(self):
        return tuple(f"pca_{i}" for i in range(self.n_components))

    def transform(self, X: Table) -> Table:
        P = (self._inputs(X) - self.mean) @ self.components
        rest = X.drop(self.columns_in)
        clash = [c for c in self.columns_out if c in rest]
        if clash:
            raise DataError(f"pca output columns already exist: {clash}")
        return rest.with_columns({c: P[:, j] for j, c in enumerate(self.columns_out)})

    def update_types(self, types):
        return types.without(self.columns_in)

    def summary(self):
        ratio = self.explained_variance / self.total_variance if self.total_variance > 0 else self.explained_variance
        return {
            "columns_in": list(self.columns_in),
            "n_components": int(self.n_components),
            "explained_variance": [float(v) for v in self.explained_variance],
            "explained_variance_ratio": [float(v) for v in ratio],
        }


def _fit_pca(spec, X, types, y, side):
    cols = tuple(resolve_selector(spec.apply_to, X, types))
    M = X.to_matrix(cols)
    if M.shape[0] < 2:
        raise DataError("pca needs at least 2 training rows")
    mean = M.mean(axis=0)
    C = M - mean
    cov = C.T @ C / (M.shape[0] - 1)
    values, vectors = sym_eigen((cov + cov.T) / 2.0)
    values = np.clip(values, 0.0, None)
    total = float(values.sum())
    retain = spec.params["retain"]
    if isinstance(retain, int):
        if retain > len(cols):
            raise DataError(f"pca cannot keep {retain} components from {len(cols)} columns")
        k = retain
    elif retain == 1.0:
        k = int(np.sum(values > 1e-12 * total)) if total > 0 else 0
    else:
        frac = np.cumsum(values) / total if total > 0 else np.zeros_like(values)
        k = int(np.searchsorted(frac, retain) + 1)
        k = min(k, len(cols))
    if k < 1:
        raise DataError("pca found no components with non-zero variance")
    return FittedPCA(cols, mean, vectors[:, :k].copy(), values[:k].copy(), total)


@dataclass(frozen=True)
class FittedConfoundRemover(Fitted):
    columns_in: tuple[str, ...]
    confounds: tuple[str, ...]
    coef: np.ndarray  # confounds x features
    intercept: np.ndarray
    subgroup: tuple[str, str] | None
    n_fit_rows: int
    kind: str = "confound_remover"

    def transform(self, X: Table) -> Table:
        F = self._inputs(X)
        missing = [c for c in self.confounds if c not in X]
        if missing:
            raise DataError(f"confound_remover: missing confound columns {missing}")
        R = F - (X.to_matrix(self.confounds) @ self.coef + self.intercept)
        return X.with_columns({c: R[:, j] for j, c in enumerate(self.columns_in)})

    def update_types(self, types):
        return types.retag(self.confounds, REMOVED_CONFOUND)

    def summary(self):
        return {
            "features": list(self.columns_in),
            "confounds": list(self.confounds),
            "subgroup": list(self.subgroup) if self.subgroup else None,
            "n_fit_rows": self.n_fit_rows,
            "coef": {
                f: {c: float(self.coef[i, j]) for i, c in enumerate(self.confounds)}
                for j, f in enumerate(self.columns_in)
            },
            "intercept": dict(zip(self.columns_in, map(float, self.intercept))),
        }


def _fit_confound_remover(spec, X, types, y, side):
    feats = tuple(resolve_selector(spec.apply_to, X, types))
    confs = tuple(resolve_selector(spec.params["confounds"], X, types))
    overlap = sorted(set(feats) & set(confs))
    if overlap:
        raise ConfigError(f"confound columns overlap the features to deconfound: {overlap}")
    F = X.to_matrix(feats)
    C = X.to_matrix(confs)
    rows = np.ones(X.n_rows, dtype=bool)
    subgroup = spec.params["subgroup"]
    if subgroup is not None:
        column, value = subgroup
        if column in X:
            raise ConfigError(f"subgroup column {column!r} must not be a feature")
        if side is None or column not in side:
            raise DataError(f"subgroup column {column!r} not found in data")
        if side.is_numeric(column):
            raise DataError(f"subgroup column {column!r} must be categorical")
        rows = side[column] == value
        if not rows.any():
            raise DataError(f"subgroup value {value!r} absent from training rows")
        if rows.sum() < len(confs) + 2:
            raise DataError(
                f"subgroup {column}={value!r} has {int(rows.sum())} training rows; "
                f"at least {len(confs) + 2} needed"
            )
    coef, intercept = fit_linear(C[rows], F[rows], intercept=spec.params["intercept"])
    return FittedConfoundRemover(
        feats, confs, np.atleast_2d(coef), np.asarray(intercept, dtype=float), subgroup, int(rows.sum())
    )


@dataclass(frozen=True)
class FittedCBPM(Fitted):
    columns_in: tuple[str, ...]
    r: np.ndarray
    p: np.ndarray
    alpha: float
    sign: str
    aggregation: str
    positive: tuple[str, ...]
    negative: tuple[str, ...]
    warnings: tuple[str, ...] = ()
    kind: str = "cbpm"

    @property
    def columns_out(self):
        groups = []
        if self.sign in ("positive", "both"):
            groups.append(("cbpm_pos", self.positive))
        if self.sign in ("negative", "both"):
            groups.append(("cbpm_neg", self.negative))
        if not any(members for _, members in groups):
            return ("cbpm_empty",)
        return tuple(name for name, _ in groups)

    def _aggregate(self, X, names):
        if not names:
            return np.zeros(X.n_rows)
        M = X.to_matrix(names)
        return M.sum(axis=1) if self.aggregation == "sum" else M.mean(axis=1)

    def transform(self, X: Table) -> Table:
        self._inputs(X)
        out = {}
        for name in self.columns_out:
            if name == "cbpm_pos":
                out[name] = self._aggregate(X, self.positive)
            elif name == "cbpm_neg":
                out[name] = self._aggregate(X, self.negative)
            else:
                out[name] = np.zeros(X.n_rows)
        rest = X.drop(self.columns_in)
        clash = [c for c in out if c in rest]
        if clash:
            raise DataError(f"cbpm output columns already exist: {clash}")
        return rest.with_columns(out)

    def update_types(self, types):
        return types.without(self.columns_in)

    def summary(self):
        return {
            "alpha": self.alpha,
            "sign": self.sign,
            "aggregation": self.aggregation,
            "positive": list(self.positive),
            "negative": list(self.negative),
            "columns_out": list(self.columns_out),
            "warnings": list(self.warnings),
        }


def numeric_target(y) -> np.ndarray:
    """Target as floats; a binary categorical target maps to 0/1 in sorted label order."""
    y = np.asarray(y)
    if y.dtype.kind == "f":
        return y
    classes = sorted(set(y.tolist()))
    if len(classes) != 2:
        raise DataError(f"a numeric or binary target is required, got {len(classes)} classes")
    return (y == classes[1]).astype(float)


def cbpm_select(M, y, alpha):
    """Correlation, p-value and significance mask of each column of ``M`` against ``y``."""
    n = M.shape[0]
    r = pearson_columns(M, y)
    p = np.array([pearson_p(float(v), n) for v in r])
    return r, p, p < alpha


def _fit_cbpm(spec, X, types, y, side):
    cols = tuple(resolve_selector(spec.apply_to, X, types))
    if y is None:
        raise DataError("cbpm needs the training target")
    target = numeric_target(y)
    if target.size < 3:
        raise DataError("cbpm needs at least 3 training rows")
    if np.ptp(target) == 0.0:
        raise DataError("cbpm needs a non-constant training target")
    M = X.to_matrix(cols)
    r, p, selected = cbpm_select(M, target, spec.params["alpha"])
    positive = tuple(c for c, s, v in zip(cols, selected, r) if s and v > 0)
    negative = tuple(c for c, s, v in zip(cols, selected, r) if s and v < 0)
    sign = spec.params["sign"]
    warnings = []
    want_pos = sign in ("positive", "both")
    want_neg = sign in ("negative", "both")
    if (not want_pos or not positive) and (not want_neg or not negative):
        warnings.append(f"cbpm: no features pass p < {spec.params['alpha']}; emitting a constant zero column")
    else:
        if want_pos and not positive:
            warnings.append("cbpm: no positively correlated features selected; cbpm_pos is all zeros")
        if want_neg and not negative:
            warnings.append("cbpm: no negatively correlated features selected; cbpm_neg is all zeros")
    return FittedCBPM(
        cols, r, p, spec.params["alpha"], sign, spec.params["aggregation"], positive, negative, tuple(warnings)
    )


_FITTERS = {
    "zscore": _fit_zscore,
    "variance_threshold": _fit_variance_threshold,
    "pca": _fit_pca,
    "confound_remover": _fit_confound_remover,
    "cbpm": _fit_cbpm,
}
