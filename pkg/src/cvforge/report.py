"""Delimited outputs and companion figures for runs, comparisons and inspections.

The CSV files are the data contract; the PNG figures rendered next to them are
a convenience view of the same numbers.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .cv import CVResult
from .numerics import t_ppf
from .table import Table, write_csv


def scores_table(result: CVResult) -> Table:
    recs = result.scores
    return Table(
        [
            ("repeat", [r.repeat for r in recs]),
            ("fold", [r.fold for r in recs]),
            ("metric", [r.metric for r in recs]),
            ("value", [r.value for r in recs]),
            ("n_train", [r.n_train for r in recs]),
            ("n_test", [r.n_test for r in recs]),
        ]
    )


def long_scores_table(rows: Sequence[dict]) -> Table:
    return Table([(k, [r[k] for r in rows]) for k in ("model", "repeat", "fold", "metric", "value")])


def mean_ci(values, level=0.95) -> tuple[float, float]:
    """Mean and half-width of the t-based confidence interval."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    half = t_ppf(0.5 + level / 2, values.size - 1) * values.std(ddof=1) / math.sqrt(values.size)
    return float(values.mean()), float(half)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_fold_scores(series: Sequence[tuple[str, np.ndarray]], metric: str, path, table_rows=None) -> None:
    """One column of per-fold dots per model, with mean and 95% CI bars.

    ``table_rows`` (pairwise comparison rows) are drawn as a table beneath.
    """
    plt = _pyplot()
    height = 4.5 + (0.3 * len(table_rows) + 0.4 if table_rows else 0.0)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(series) + 2), height))
    for x, (name, values) in enumerate(series):
        values = np.asarray(values, dtype=float)
        # evenly spread offsets instead of random jitter keep the figure reproducible
        offsets = np.linspace(-0.15, 0.15, values.size) if values.size > 1 else np.zeros(1)
        ax.scatter(x + offsets, values, s=14, alpha=0.7)
        mean, half = mean_ci(values)
        ax.errorbar([x], [mean], yerr=[half], color="black", capsize=8, marker="_", markersize=24)
    ax.set_xticks(range(len(series)))
    ax.set_xticklabels([name for name, _ in series])
    ax.set_ylabel(metric)
    ax.set_xlim(-0.6, len(series) - 0.4)
    if table_rows:
        cells = [[r["name_a"], r["name_b"], f"{r['t']:.3f}", f"{r['p']:.3g}"] for r in table_rows]
        tab = ax.table(cellText=cells, colLabels=["model a", "model b", "t", "p"], loc="bottom", bbox=[0.0, -0.12 - 0.09 * (len(cells) + 1), 1.0, 0.09 * (len(cells) + 1)])
        tab.auto_set_font_size(False)
        tab.set_fontsize(8)
        ax.set_xlabel("")
        ax.xaxis.set_ticks_position("top")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_predictions(y_true, y_pred, problem_type: str, path, title="") -> None:
    """Predicted against true values, or a confusion matrix for labels."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if problem_type == "regression":
        y_true = np.asarray(y_true, dtype=float)
        y_pred = np.asarray(y_pred, dtype=float)
        ax.scatter(y_true, y_pred, s=12, alpha=0.7)
        lo = float(min(y_true.min(), y_pred.min()))
        hi = float(max(y_true.max(), y_pred.max()))
        ax.plot([lo, hi], [lo, hi], color="grey", linewidth=1)
        ax.set_xlabel("true")
        ax.set_ylabel("predicted")
    else:
        labels = sorted(set(map(str, y_true)) | set(map(str, y_pred)))
        pos = {c: i for i, c in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=int)
        for t, p in zip(y_true, y_pred):
            counts[pos[str(t)], pos[str(p)]] += 1
        ax.imshow(counts, cmap="Blues")
        for i in range(len(labels)):
            for j in range(len(labels)):
                ax.text(j, i, str(counts[i, j]), ha="center", va="center")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels)
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def write_run_outputs(result: CVResult, json_path) -> dict[str, Path]:
    """Scores CSV and score figure next to the result file."""
    json_path = Path(json_path)
    csv_path = json_path.with_suffix(".scores.csv")
    png_path = json_path.with_suffix(".scores.png")
    write_csv(scores_table(result), csv_path)
    metric = result.metrics[0]
    plot_fold_scores([(json_path.stem, result.fold_scores(metric))], metric, png_path)
    return {"scores_csv": csv_path, "scores_png": png_path}
