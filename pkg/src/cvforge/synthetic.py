"""Seeded synthetic datasets used by the examples, tests and bundled sample data."""

from __future__ import annotations

import numpy as np

from .numerics import RngStream
from .table import Table


def _gen(seed):
    return RngStream(seed).numpy()


def _names(prefix, p):
    return [f"{prefix}{i}" for i in range(p)]


def null_classification(n=100, p=50, seed=0) -> Table:
    """Gaussian features and a balanced binary target drawn independently of them."""
    g = _gen(seed)
    X = g.standard_normal((n, p))
    y = np.array(["neg"] * (n // 2) + ["pos"] * (n - n // 2), dtype=object)[g.permutation(n)]
    return Table([*zip(_names("f", p), X.T), ("y", y)])


def linear_regression(n=100, p=5, noise=1.0, seed=0) -> Table:
    """``y = X w + noise`` with ``w`` drawn from a standard normal; includes a low-variance column."""
    g = _gen(seed)
    X = g.standard_normal((n, p))
    w = g.standard_normal(p)
    y = X @ w + noise * g.standard_normal(n)
    flat = 1.0 + 1e-7 * g.standard_normal(n)
    return Table([*zip(_names("x", p), X.T), ("flat", flat), ("y", y)])


def confound_classification(n=200, p=5, shift=0.6, confound_weight=2.0, seed=0) -> Table:
    """Control/patient data whose features are ``signal + confound_weight * age``.

    ``age`` is a standardized confound drawn independently of the diagnosis,
    so any age bias in misclassifications comes from the features alone.
    """
    g = _gen(seed)
    dx = np.array(["control"] * (n // 2) + ["patient"] * (n - n // 2), dtype=object)[g.permutation(n)]
    age = g.standard_normal(n)
    signal = g.standard_normal((n, p)) + shift * (dx == "patient")[:, None]
    X = signal + confound_weight * age[:, None]
    return Table([*zip(_names("roi", p), X.T), ("age", age), ("dx", dx)])


def planted_network(n=150, p=200, informative=20, strength=0.3, seed=0) -> Table:
    """Edges of which the first ``informative`` correlate positively with a continuous score."""
    g = _gen(seed)
    y = g.standard_normal(n)
    X = g.standard_normal((n, p))
    X[:, :informative] += strength * y[:, None]
    return Table([*zip(_names("edge", p), X.T), ("score", y)])


def sample_dataset(n=120, seed=7) -> Table:
    """Small mixed-type table for the bundled sample CSV."""
    g = _gen(seed)
    age = g.uniform(20.0, 80.0, n)
    site = np.array(["a", "b", "c"], dtype=object)[g.integers(0, 3, n)]
    X = g.standard_normal((n, 4))
    X[:, 0] += 0.05 * (age - 50.0)
    score = X @ np.array([1.0, -0.5, 0.25, 0.0]) + 0.03 * age + 0.5 * g.standard_normal(n)
    group = np.where(score > np.median(score), "high", "low").astype(object)
    return Table(
        [*zip(_names("x", 4), X.T), ("age", np.round(age, 1)), ("site", site), ("score", score), ("group", group)]
    )
