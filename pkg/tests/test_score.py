import numpy as np
import pytest
from scipy import stats

from cvforge.errors import ConfigError, DataError
from cvforge.score import METRICS, get_metric, score


def test_hand_checkable_mae():
    assert score("neg_mean_absolute_error", [1, 2], [2, 2]) == -0.5


def test_perfect_predictions():
    y = [1.0, 2.0, 4.0]
    assert score("r2", y, y) == 1.0
    assert score("neg_mean_absolute_error", y, y) == 0.0
    assert score("accuracy", ["a", "b"], ["a", "b"]) == 1.0


def test_balanced_accuracy_per_class_recall():
    y, yhat = ["a", "a", "a", "b"], ["a", "a", "a", "a"]
    assert score("accuracy", y, yhat) == 0.75
    assert score("balanced_accuracy", y, yhat) == 0.5


def test_against_reference_formulas():
    rng = np.random.default_rng(0)
    y, yhat = rng.normal(size=30), rng.normal(size=30)
    assert score("neg_mean_squared_error", y, yhat) == pytest.approx(-np.mean((y - yhat) ** 2))
    assert score("r2", y, yhat) == pytest.approx(1 - np.sum((y - yhat) ** 2) / np.sum((y - y.mean()) ** 2))
    assert score("pearson_r_score", y, yhat) == pytest.approx(stats.pearsonr(y, yhat)[0])


def test_constant_truth_is_an_error():
    with pytest.raises(DataError):
        score("r2", [1.0, 1.0], [1.0, 2.0])
    with pytest.raises(DataError):
        score("pearson_r_score", [1.0, 1.0], [1.0, 2.0])


def test_constant_prediction_correlation_is_zero():
    assert score("pearson_r_score", [1.0, 2.0, 3.0], [5.0, 5.0, 5.0]) == 0.0


def test_length_and_registry_errors():
    with pytest.raises(DataError, match="length"):
        score("neg_mean_absolute_error", [1.0], [1.0, 2.0])
    with pytest.raises(ConfigError):
        get_metric("auc")
    with pytest.raises(ConfigError):
        get_metric("accuracy", "regression")


def test_permutation_invariance_and_orientation():
    rng = np.random.default_rng(1)
    y, yhat = rng.normal(size=20), rng.normal(size=20)
    perm = rng.permutation(20)
    for name in ("neg_mean_absolute_error", "neg_mean_squared_error", "r2", "pearson_r_score"):
        assert score(name, y[perm], yhat[perm]) == pytest.approx(score(name, y, yhat), abs=1e-12)
    assert score("neg_mean_absolute_error", y, yhat) <= 0
    labels = rng.choice(["a", "b", "c"], 20)
    guess = rng.choice(["a", "b", "c"], 20)
    assert 0 <= score("accuracy", labels, guess) <= 1


def test_balanced_equals_plain_when_balanced():
    y = ["a", "a", "b", "b", "c", "c"]
    yhat = ["a", "b", "b", "b", "a", "c"]
    assert score("balanced_accuracy", y, yhat) == pytest.approx(score("accuracy", y, yhat))


def test_registry_names_unique():
    assert len(METRICS) == 6
