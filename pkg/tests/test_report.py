import numpy as np
import pytest
from scipy import stats

from cvforge.cv import CVScheme, run_cross_validation
from cvforge.pipeline import PipelineSpec
from cvforge.report import mean_ci, plot_fold_scores, plot_predictions, scores_table, write_run_outputs
from cvforge.table import Table, read_csv

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_mean_ci_matches_scipy():
    x = np.array([1.0, 2.0, 4.0, 3.5, 2.2])
    mean, half = mean_ci(x)
    lo, hi = stats.t.interval(0.95, 4, loc=x.mean(), scale=stats.sem(x))
    assert mean == pytest.approx(x.mean())
    assert half == pytest.approx((hi - lo) / 2, abs=1e-9)


def test_run_outputs_written(tmp_path):
    rng = np.random.default_rng(0)
    t = Table({"x": rng.normal(size=20), "y": rng.normal(size=20)})
    r = run_cross_validation(t, ["x"], "y", spec=PipelineSpec("regression").add("linear_reg"), scheme=CVScheme("kfold", 4))
    paths = write_run_outputs(r, tmp_path / "run.json")
    back = read_csv(paths["scores_csv"])
    assert back == scores_table(r)
    assert paths["scores_png"].read_bytes()[:8] == PNG_MAGIC


def test_figures_render(tmp_path):
    rows = [{"name_a": "a", "name_b": "b", "t": 1.0, "p": 0.3}]
    plot_fold_scores([("a", [1.0, 2.0, 3.0]), ("b", [2.0, 2.5, 2.0])], "m", tmp_path / "f.png", rows)
    plot_predictions([1.0, 2.0], [1.5, 2.5], "regression", tmp_path / "s.png")
    plot_predictions(["a", "b", "a"], ["a", "a", "b"], "classification", tmp_path / "c.png")
    for name in ("f.png", "s.png", "c.png"):
        assert (tmp_path / name).read_bytes()[:8] == PNG_MAGIC
