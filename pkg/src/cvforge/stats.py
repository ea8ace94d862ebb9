"""Model comparison over a shared fold plan and two-sample tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, FoldPlanMismatch
from .numerics import t_sf


@dataclass(frozen=True)
class TestResult:
    """Outcome of a (corrected) t-test.  ``p`` is two-sided."""

    __test__ = False  # keep pytest from collecting this class

    t: float
    df: float
    p: float
    mean_diff: float
    k: int
    correction: float
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "df": self.df,
            "p": self.p,
            "mean_diff": self.mean_diff,
            "k": self.k,
            "correction": self.correction,
            "degenerate": self.degenerate,
        }


def corrected_ttest_diffs(d, n_test: float, n_train: float) -> TestResult:
    """Paired t-test on fold-wise differences with the variance inflated by ``1/k + n_test/n_train``.

    Parameters
    ----------
    d : array_like
        Per-fold score differences, one per (repeat, fold).
    n_test, n_train : float
        Test and training set sizes (means when folds differ by one sample).
    """
    d = np.asarray(d, dtype=float)
    k = d.size
    if k < 2:
        raise DataError("at least 2 paired folds are needed")
    if not np.all(np.isfinite(d)):
        raise DataError("score differences contain NaN or Inf")
    if n_train <= 0:
        raise DataError("n_train must be positive")
    correction = 1.0 / k + n_test / n_train
    mean = float(np.mean(d))
    var = float(np.var(d, ddof=1))
    # a spread at rounding level of the values themselves counts as none
    if math.sqrt(var) <= 16 * np.finfo(float).eps * float(np.max(np.abs(d))):
        var = 0.0
    if var == 0.0:
        if mean == 0.0:
            return TestResult(0.0, k - 1, 1.0, mean, k, correction)
        return TestResult(math.copysign(math.inf, mean), k - 1, 0.0, mean, k, correction, degenerate=True)
    t = mean / math.sqrt(correction * var)
    p = min(1.0, 2.0 * t_sf(abs(t), k - 1))
    return TestResult(t, k - 1, p, mean, k, correction)


def check_same_plan(a, b) -> None:
    if a.fold_meta() != b.fold_meta() or [f.test for f in a.folds] != [f.test for f in b.folds]:
        raise FoldPlanMismatch("results were produced on different fold plans")


def corrected_ttest(a, b, metric: str) -> TestResult:
    """Compare two CV results fold by fold on ``metric`` (positive t favours ``a``)."""
    check_same_plan(a, b)
    for name, r in (("first", a), ("second", b)):
        if metric not in r.metrics:
            raise DataError(f"metric {metric!r} absent from the {name} result")
    d = a.fold_scores(metric) - b.fold_scores(metric)
    n_test = float(np.mean([f.n_test for f in a.folds]))
    n_train = float(np.mean([f.n_train for f in a.folds]))
    return corrected_ttest_diffs(d, n_test, n_train)


@dataclass(frozen=True)
class Comparison:
    rows: list[dict]
    scores: list[dict]

    def render(self) -> str:
        """Aligned plain-text table."""
        header = ["model_a", "model_b", "mean_a", "mean_b", "t", "df", "p"]
        body = [
            [r["name_a"], r["name_b"], f"{r['mean_a']:.4f}", f"{r['mean_b']:.4f}", f"{r['t']:.4f}", str(r["df"]), f"{r['p']:.4g}"]
            for r in self.rows
        ]
        widths = [max(len(x) for x in col) for col in zip(header, *body)]
        lines = ["  ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip() for line in [header, *body]]
        return "\n".join(lines) + "\n"


def compare_all(results: Sequence[tuple[str, object]], metric: str) -> Comparison:
    """All pairwise corrected t-tests plus the long-format per-fold score table."""
    if len(results) < 2:
        raise DataError("at least two results are needed for a comparison")
    names = [n for n, _ in results]
    if len(set(names)) != len(names):
        raise DataError("result names must be unique")
    rows = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            (na, a), (nb, b) = results[i], results[j]
            res = corrected_ttest(a, b, metric)
            rows.append(
                {"name_a": na, "name_b": nb, "t": res.t, "df": res.df, "p": res.p,
                 "mean_a": a.mean(metric), "mean_b": b.mean(metric), "degenerate": res.degenerate}
            )
    scores = [
        {"model": name, "repeat": rec.repeat, "fold": rec.fold, "metric": metric, "value": rec.value}
        for name, r in results
        for rec in r.scores
        if rec.metric == metric
    ]
    return Comparison(rows, scores)


def welch_ttest(x, y) -> TestResult:
    """Two-sided Welch t-test for a difference in means of two independent samples."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or y.size < 2:
        raise DataError("each sample needs at least 2 values")
    vx, vy = np.var(x, ddof=1) / x.size, np.var(y, ddof=1) / y.size
    diff = float(x.mean() - y.mean())
    se2 = vx + vy
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(0.0, x.size + y.size - 2, 1.0, diff, x.size + y.size, 1.0)
        return TestResult(math.copysign(math.inf, diff), x.size + y.size - 2, 0.0, diff, x.size + y.size, 1.0, True)
    df = se2**2 / (vx**2 / (x.size - 1) + vy**2 / (y.size - 1))
    t = diff / math.sqrt(se2)
    return TestResult(t, float(df), min(1.0, 2.0 * t_sf(abs(t), df)), diff, x.size + y.size, 1.0)


def misclassification_confound_test(y_true, y_pred, confound) -> TestResult:
    """Does the confound differ between misclassified members of the two classes?

    Misclassified samples are split by their true class and their confound
    values compared with a Welch test.  Exactly two classes are required.
    """
    y_true = np.array([str(v) for v in y_true], dtype=object)
    y_pred = np.array([str(v) for v in y_pred], dtype=object)
    confound = np.asarray(confound, dtype=float)
    classes = sorted(set(y_true.tolist()))
    if len(classes) != 2:
        raise DataError("the misclassification test needs exactly two classes")
    wrong = y_true != y_pred
    a = confound[wrong & (y_true == classes[0])]
    b = confound[wrong & (y_true == classes[1])]
    return welch_ttest(a, b)
