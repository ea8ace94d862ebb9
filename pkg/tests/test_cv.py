import itertools

import numpy as np
import pytest

from cvforge.cv import CVScheme, TuningConfig, make_splits, run_cross_validation, tune_grid
from cvforge.errors import ConfigError, DataError, FoldError
from cvforge.numerics import RngStream
from cvforge.pipeline import PipelineSpec
from cvforge.synthetic import null_classification
from cvforge.table import Table


def test_kfold_contiguous():
    folds = make_splits(CVScheme("kfold", 3), 6)
    assert [f.test for f in folds] == [(0, 1), (2, 3), (4, 5)]
    assert folds[0].train == (2, 3, 4, 5)


def test_kfold_uneven_sizes():
    sizes = [f.n_test for f in make_splits(CVScheme("kfold", 3), 8)]
    assert sizes == [3, 3, 2]


def test_leave_one_out():
    folds = make_splits(CVScheme("leave_one_out"), 4)
    assert [f.test for f in folds] == [(0,), (1,), (2,), (3,)]


def test_stratified_two_classes():
    y = np.array(["a", "a", "b", "b"], dtype=object)
    for shuffle in (False, True):
        for seed in range(5):
            folds = make_splits(CVScheme("stratified_kfold", 2, shuffle=shuffle), 4, y, rng=RngStream(seed))
            for f in folds:
                assert sorted(y[list(f.test)]) == ["a", "b"]


def test_repeated_kfold_reshuffles_each_repeat():
    folds = make_splits(CVScheme("repeated_kfold", 3, repeats=2), 12, rng=RngStream(1))
    assert [f.repeat for f in folds] == [0, 0, 0, 1, 1, 1]
    assert [f.test for f in folds[:3]] != [f.test for f in folds[3:]]
    again = make_splits(CVScheme("repeated_kfold", 3, repeats=2), 12, rng=RngStream(1))
    assert folds == again


def test_group_kfold_keeps_groups_together():
    groups = np.array(list("aabbbcdddde"), dtype=object)
    folds = make_splits(CVScheme("group_kfold", 3, group="g"), 11, groups=groups)
    for f in folds:
        assert not set(groups[list(f.test)]) & set(groups[list(f.train)])


def test_split_errors():
    with pytest.raises(DataError, match="cannot make 5 folds from 4 samples"):
        make_splits(CVScheme("kfold", 5), 4)
    with pytest.raises(DataError, match="fewer than k"):
        make_splits(CVScheme("stratified_kfold", 3), 5, np.array(list("aaabb"), dtype=object))
    with pytest.raises(DataError, match="groups"):
        make_splits(CVScheme("group_kfold", 3, group="g"), 4, groups=np.array(list("aabb"), dtype=object))
    with pytest.raises(ConfigError):
        CVScheme("kfold", 1)
    with pytest.raises(ConfigError):
        CVScheme("group_kfold", 3)
    with pytest.raises(ConfigError):
        CVScheme("bootstrap")


def test_constant_target_dummy_scores_zero():
    t = Table({"x": np.arange(20.0), "y": np.full(20, 3.0)})
    for scheme in (CVScheme("kfold", 4), CVScheme("leave_one_out"), CVScheme("repeated_kfold", 5, repeats=2)):
        r = run_cross_validation(t, ["x"], "y", spec=PipelineSpec("regression").add("dummy"), scheme=scheme)
        assert all(s.value == 0.0 for s in r.scores)
        assert r.mean("neg_mean_absolute_error") == 0.0


def test_noise_target_honest_accuracy_near_chance():
    t = null_classification(seed=0)
    features = [c for c in t.column_names if c != "y"]
    spec = PipelineSpec("classification").add("zscore").add("logistic")
    r = run_cross_validation(t, features, "y", spec=spec, scheme=CVScheme("repeated_kfold", 5, repeats=5))
    assert 0.38 <= r.mean("accuracy") <= 0.62


def test_example_one_shape_record_count():
    rng = np.random.default_rng(0)
    t = Table({**{f"f{j}": rng.normal(size=60) for j in range(6)}, "y": rng.normal(size=60)})
    spec = PipelineSpec("regression").add("variance_threshold", threshold=1e-5).add("pca", retain=1.0).add("ridge", grid={"alpha": [0.1, 10]})
    r = run_cross_validation(
        t, [f"f{j}" for j in range(6)], "y", spec=spec, scheme=CVScheme("repeated_kfold", 5, repeats=5),
        scoring=["neg_mean_absolute_error"],
    )
    assert len(r.scores) == 25
    assert all(f.n_train + f.n_test == 60 for f in r.folds)


def test_record_count_with_several_metrics():
    rng = np.random.default_rng(1)
    t = Table({"x": rng.normal(size=30), "y": rng.normal(size=30)})
    r = run_cross_validation(
        t, ["x"], "y", spec=PipelineSpec("regression").add("linear_reg"), scheme=CVScheme("repeated_kfold", 3, repeats=2),
        scoring=["neg_mean_absolute_error", "r2", "pearson_r_score"],
    )
    assert len(r.scores) == 3 * 2 * 3
    assert r.std("r2") == pytest.approx(np.std(r.fold_scores("r2"), ddof=1))


def test_metric_must_fit_problem_type():
    t = Table({"x": [1.0, 2.0, 3.0, 4.0], "y": [1.0, 2.0, 3.0, 4.0]})
    with pytest.raises(ConfigError):
        run_cross_validation(t, ["x"], "y", spec=PipelineSpec("regression").add("dummy"), scheme=CVScheme("kfold", 2), scoring=["accuracy"])


def test_single_class_training_fold_is_reported():
    t = Table({"x": np.arange(10.0), "y": ["a"] * 8 + ["b"] * 2})
    spec = PipelineSpec("classification").add("logistic")
    with pytest.raises(FoldError, match="single class") as info:
        run_cross_validation(t, ["x"], "y", spec=spec, scheme=CVScheme("kfold", 5))
    assert (info.value.repeat, info.value.fold) == (0, 4)


def test_ridge_grid_prefers_small_penalty_on_exact_data():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 3))
    t = Table({"a": X[:, 0], "b": X[:, 1], "c": X[:, 2], "y": X @ [1.0, 2.0, -1.0]})
    spec = PipelineSpec("regression").add("ridge", grid={"alpha": [1e-6, 1e6]})
    tuned = tune_grid(spec, t, ["a", "b", "c"], "y")
    assert tuned.spec.step("ridge").params["alpha"] == 1e-6
    assert len(tuned.table) == 2


def test_singleton_grid_skips_inner_cv():
    rng = np.random.default_rng(3)
    t = Table({"x": rng.normal(size=20), "y": rng.normal(size=20)})
    spec = PipelineSpec("regression").add("ridge", grid={"alpha": [2.0]})
    tuned = tune_grid(spec, t, ["x"], "y")
    assert tuned.table == []
    plain = PipelineSpec("regression").add("ridge", alpha=2.0)
    a = run_cross_validation(t, ["x"], "y", spec=spec, scheme=CVScheme("kfold", 4))
    b = run_cross_validation(t, ["x"], "y", spec=plain, scheme=CVScheme("kfold", 4))
    assert a.scores == b.scores


def _ridge_predict(Xtr, ytr, Xte, alpha):
    mx, my = Xtr.mean(0), ytr.mean()
    A = Xtr - mx
    w = np.linalg.solve(A.T @ A + alpha * np.eye(A.shape[1]), A.T @ (ytr - my))
    return (Xte - mx) @ w + my


def test_grid_winner_matches_brute_force_oracle():
    rng = np.random.default_rng(4)
    n = 45
    X = rng.normal(size=(n, 4)) * [1.0, 1.0, 0.3, 0.1]
    y = X @ [1.0, 0.5, 2.0, 5.0] + 0.5 * rng.normal(size=n)
    names = ["a", "b", "c", "d"]
    t = Table({**dict(zip(names, X.T)), "y": y})
    thresholds, alphas = [0.0, 0.05], [0.01, 5.0, 200.0]
    spec = (
        PipelineSpec("regression")
        .add("variance_threshold", grid={"threshold": thresholds})
        .add("ridge", grid={"alpha": alphas})
    )
    tuned = tune_grid(spec, t, names, "y")
    assert len(tuned.table) == 6

    # independent inner CV: contiguous 5-fold, train-only variance filter, closed-form ridge
    bounds = np.cumsum([0] + [n // 5 + (1 if j < n % 5 else 0) for j in range(5)])
    best, best_score, means = None, -np.inf, []
    for thr, alpha in itertools.product(thresholds, alphas):
        scores = []
        for j in range(5):
            test = np.arange(bounds[j], bounds[j + 1])
            train = np.setdiff1d(np.arange(n), test)
            keep = X[train].var(axis=0, ddof=1) > thr
            pred = _ridge_predict(X[train][:, keep], y[train], X[test][:, keep], alpha)
            scores.append(-np.mean(np.abs(y[test] - pred)))
        means.append(np.mean(scores))
        if means[-1] > best_score:
            best, best_score = (thr, alpha), means[-1]
    np.testing.assert_allclose([row["mean_score"] for row in tuned.table], means, atol=1e-10)
    chosen = tuned.spec
    assert (chosen.step("variance_threshold").params["threshold"], chosen.step("ridge").params["alpha"]) == best


def test_tuning_only_sees_training_rows():
    rng = np.random.default_rng(5)
    t = Table({"x": rng.normal(size=30), "y": rng.normal(size=30)})
    spec = PipelineSpec("regression").add("ridge", grid={"alpha": [0.1, 100.0]})
    r = run_cross_validation(t, ["x"], "y", spec=spec, scheme=CVScheme("kfold", 3))
    for f, chosen in zip(r.folds, r.chosen_params):
        sub = t.take(f.train)
        expect = tune_grid(spec, sub, ["x"], "y", rng=RngStream(0).split(1).split(f.fold))
        assert chosen["inner_cv"] == expect.table


def test_custom_inner_scheme_and_objective():
    rng = np.random.default_rng(6)
    t = Table({"x": rng.normal(size=40), "y": rng.normal(size=40)})
    spec = PipelineSpec("regression").add("ridge", grid={"alpha": [0.1, 100.0]})
    r = run_cross_validation(
        t, ["x"], "y", spec=spec, scheme=CVScheme("kfold", 2), scoring=["neg_mean_absolute_error", "r2"],
        tuning=TuningConfig(CVScheme("kfold", 3), "r2"),
    )
    assert all(len(c["inner_cv"][0]["fold_scores"]) == 3 for c in r.chosen_params)


def test_runs_are_bit_identical_across_jobs():
    rng = np.random.default_rng(7)
    t = Table({**{f"f{j}": rng.normal(size=50) for j in range(4)}, "y": np.where(rng.random(50) < 0.5, "u", "v")})
    spec = PipelineSpec("classification").add("zscore").add("linear_svm", grid={"C": [0.1, 1.0]})
    kw = dict(spec=spec, scheme=CVScheme("stratified_kfold", 3, shuffle=True), seed=11, retain=True)
    a = run_cross_validation(t, [f"f{j}" for j in range(4)], "y", **kw)
    b = run_cross_validation(t, [f"f{j}" for j in range(4)], "y", jobs=3, **kw)
    assert a == b


def test_group_column_cannot_be_feature():
    t = Table({"x": np.arange(6.0), "g": ["a", "a", "b", "b", "c", "c"], "y": np.arange(6.0)})
    with pytest.raises(ConfigError):
        run_cross_validation(
            t, ["x", "g"], "y", spec=PipelineSpec("regression").add("dummy"), scheme=CVScheme("group_kfold", 3, group="g")
        )
    r = run_cross_validation(
        t, ["x"], "y", spec=PipelineSpec("regression").add("dummy"), scheme=CVScheme("group_kfold", 3, group="g")
    )
    assert len(r.folds) == 3
