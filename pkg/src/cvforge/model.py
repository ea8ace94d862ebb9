"""Final estimators: dummy, ordinary least squares, ridge, logistic and linear SVM."""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DataError
from .numerics import RngStream, fit_linear, least_squares

REGRESSION = "regression"
CLASSIFICATION = "classification"
PROBLEM_TYPES = (REGRESSION, CLASSIFICATION)

SVM_EPOCHS = 2000
LOGISTIC_TOL = 1e-8
LOGISTIC_MAX_ITER = 100


def _nonneg(name):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, numbers.Real) or not v >= 0:
            raise ConfigError(f"{name} must be a number >= 0, got {v!r}")
        return float(v)

    return check


def _positive(name):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, numbers.Real) or not v > 0:
            raise ConfigError(f"{name} must be a number > 0, got {v!r}")
        return float(v)

    return check


PARAMS: dict[str, dict[str, tuple[Any, Any]]] = {
    "dummy": {},
    "linear_reg": {},
    "ridge": {"alpha": (1.0, _nonneg("alpha"))},
    "logistic": {"alpha": (1.0, _nonneg("alpha"))},
    "linear_svm": {"C": (1.0, _positive("C")), "epsilon": (0.0, _nonneg("epsilon"))},
}

VALID_FOR = {
    "dummy": PROBLEM_TYPES,
    "linear_svm": PROBLEM_TYPES,
    "linear_reg": (REGRESSION,),
    "ridge": (REGRESSION,),
    "logistic": (CLASSIFICATION,),
}


def check_param(name, param, value):
    schema = PARAMS[name]
    if param not in schema:
        raise ConfigError(f"{name} has no parameter {param!r}")
    return schema[param][1](value)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    problem_type: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in PARAMS:
            raise ConfigError(f"unknown model {self.name!r}")
        if self.problem_type not in PROBLEM_TYPES:
            raise ConfigError(f"unknown problem type {self.problem_type!r}")
        if self.problem_type not in VALID_FOR[self.name]:
            raise ConfigError(f"model {self.name!r} does not support {self.problem_type}")
        full = {p: check(default) for p, (default, check) in PARAMS[self.name].items()}
        for p, v in dict(self.params).items():
            full[p] = check_param(self.name, p, v)
        object.__setattr__(self, "params", full)


# ---------------------------------------------------------------------------
# Fitted models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedModel:
    name: str
    problem_type: str
    n_features: int
    coef: np.ndarray | None = None  # n_outputs x n_features
    intercept: np.ndarray | None = None
    classes: tuple[str, ...] = ()
    constant: Any = None  # training mean or majority class of the dummy model

    def decision_function(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        return X @ self.coef.T + self.intercept

    def summary(self, feature_names=None) -> dict:
        out = {"model": self.name}
        if self.name == "dummy":
            out["mean" if self.problem_type == REGRESSION else "majority"] = self.constant
            return out
        names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(self.n_features)]
        if self.problem_type == REGRESSION:
            out["coef"] = dict(zip(names, map(float, self.coef[0])))
            out["intercept"] = float(self.intercept[0])
        else:
            out["classes"] = list(self.classes)
            targets = self.classes[1:] if len(self.classes) == 2 else self.classes
            out["coef"] = {c: dict(zip(names, map(float, row))) for c, row in zip(targets, self.coef)}
            out["intercept"] = {c: float(b) for c, b in zip(targets, self.intercept)}
        return out


def _check_X(X, n_features=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("X must be 2-dimensional")
    if not np.all(np.isfinite(X)):
        raise DataError("X contains NaN or Inf")
    if n_features is not None and X.shape[1] != n_features:
        raise DataError(f"dimension mismatch: model was fitted on {n_features} features, got {X.shape[1]}")
    return X


def _fit_ridge(X, y, alpha):
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    p = X.shape[1]
    if alpha > 0 and p > 0:
        A = np.vstack([Xc, np.sqrt(alpha) * np.eye(p)])
        b = np.concatenate([y - y_mean, np.zeros(p)])
    else:
        A, b = Xc, y - y_mean
    coef = least_squares(A, b)
    return coef, y_mean - x_mean @ coef


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic_objective(Xa, y01, beta, alpha):
    eta = Xa @ beta
    return float(np.sum(np.logaddexp(0.0, eta) - y01 * eta) + 0.5 * alpha * beta[1:] @ beta[1:])


def logistic_gradient(Xa, y01, beta, alpha):
    g = Xa.T @ (_sigmoid(Xa @ beta) - y01)
    g[1:] += alpha * beta[1:]
    return g


def _fit_logistic_binary(X, y01, alpha):
    """L2-penalised logistic regression by damped Newton (IRLS) steps."""
    n, p = X.shape
    Xa = np.hstack([np.ones((n, 1)), X])
    penalty = np.full(p + 1, alpha)
    penalty[0] = 0.0
    beta = np.zeros(p + 1)
    f = logistic_objective(Xa, y01, beta, alpha)
    for _ in range(LOGISTIC_MAX_ITER):
        g = logistic_gradient(Xa, y01, beta, alpha)
        if np.linalg.norm(g) <= LOGISTIC_TOL:
            break
        mu = _sigmoid(Xa @ beta)
        H = (Xa * (mu * (1.0 - mu))[:, None]).T @ Xa + np.diag(penalty)
        delta = least_squares(H, g)
        step = 1.0
        for _ in range(50):
            candidate = beta - step * delta
            f_new = logistic_objective(Xa, y01, candidate, alpha)
            # near the optimum the decrease drops below rounding of f
            if f_new <= f or (step == 1.0 and f_new - f <= 1e-12 * max(1.0, abs(f))):
                break
            step *= 0.5
        else:
            break
        if np.array_equal(candidate, beta):
            break
        beta, f = candidate, f_new
    return beta[1:], beta[0]


def _fit_svm(X, target, C, epsilon, rng: RngStream, loss):
    from . import _svm

    n = X.shape[0]
    x_mean = X.mean(axis=0)
    offset = target.mean() if loss == _svm.EPS_INSENSITIVE else 0.0
    Xa = np.hstack([X - x_mean, np.ones((n, 1))])
    lam = 1.0 / (C * n)
    w, _ = _svm.pegasos(
        np.ascontiguousarray(Xa), np.ascontiguousarray(target - offset), lam, SVM_EPOCHS, np.uint64(rng.state), loss, epsilon
    )
    coef = w[:-1]
    return coef, w[-1] + offset - x_mean @ coef


def fit(spec: ModelSpec, X, y, rng: RngStream | None = None) -> FittedModel:
    """Fit the estimator described by ``spec``."""
    X = _check_X(X)
    y = np.asarray(y)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    rng = rng or RngStream()
    n, p = X.shape
    name, params = spec.name, spec.params

    if spec.problem_type == REGRESSION:
        y = y.astype(float)
        if not np.all(np.isfinite(y)):
            raise DataError("y contains NaN or Inf")
        if name == "dummy":
            return FittedModel(name, REGRESSION, p, constant=float(y.mean()))
        if name == "linear_reg":
            coef, b = fit_linear(X, y)
        elif name == "ridge":
            coef, b = _fit_ridge(X, y, params["alpha"])
        else:
            from ._svm import EPS_INSENSITIVE

            coef, b = _fit_svm(X, y, params["C"], params["epsilon"], rng, EPS_INSENSITIVE)
        return FittedModel(name, REGRESSION, p, np.atleast_2d(coef), np.array([float(b)]))

    labels = np.array([str(v) for v in y], dtype=object)
    classes = tuple(sorted(set(labels.tolist())))
    if name == "dummy":
        counts = {c: int(np.sum(labels == c)) for c in classes}
        top = max(counts.values())
        return FittedModel(name, CLASSIFICATION, p, classes=classes, constant=min(c for c in classes if counts[c] == top))
    if len(classes) < 2:
        raise DataError(f"single class in training data: {classes[0]!r}")
    targets = classes[1:] if len(classes) == 2 else classes
    coefs, intercepts = [], []
    for k, positive in enumerate(targets):
        is_pos = labels == positive
        if name == "logistic":
            c, b = _fit_logistic_binary(X, is_pos.astype(float), params["alpha"])
        else:
            from ._svm import HINGE

            c, b = _fit_svm(X, np.where(is_pos, 1.0, -1.0), params["C"], 0.0, rng.split(k), HINGE)
        coefs.append(c)
        intercepts.append(b)
    return FittedModel(name, CLASSIFICATION, p, np.array(coefs), np.array(intercepts, dtype=float), classes)


def predict(m: FittedModel, X) -> np.ndarray:
    """Real-valued predictions (regression) or class labels (classification)."""
    X = _check_X(X, m.n_features)
    if m.name == "dummy":
        if m.problem_type == REGRESSION:
            return np.full(X.shape[0], m.constant)
        return np.array([m.constant] * X.shape[0], dtype=object)
    scores = m.decision_function(X)
    if m.problem_type == REGRESSION:
        return scores[:, 0]
    classes = np.array(m.classes, dtype=object)
    if len(m.classes) == 2:
        return classes[(scores[:, 0] > 0).astype(int)]
    return classes[np.argmax(scores, axis=1)]
