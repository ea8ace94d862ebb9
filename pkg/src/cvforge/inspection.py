"""Read-only views over cross-validation results."""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .cv import CVResult
from .errors import NotRetained
from .table import Table


@dataclass(frozen=True)
class InspectionView:
    """Accessor over a :class:`CVResult`, optionally focused on one (repeat, fold)."""

    result: CVResult
    repeat: int | None = None
    fold: int | None = None

    def at(self, repeat: int, fold: int) -> InspectionView:
        _fold_position(self.result, repeat, fold)
        return InspectionView(self.result, repeat, fold)

    def fold_predictions(self) -> Table:
        return fold_predictions(self)

    def fitted_params(self, repeat: int | None = None, fold: int | None = None) -> dict:
        repeat = self.repeat if repeat is None else repeat
        fold = self.fold if fold is None else fold
        if repeat is None or fold is None:
            raise NotRetained("select a fold with at(repeat, fold) or pass repeat and fold")
        return fitted_params(self, repeat, fold)

    def chosen_params(self) -> list[dict]:
        return copy.deepcopy(list(self.result.chosen_params))


def _fold_position(result: CVResult, repeat: int, fold: int) -> int:
    for i, f in enumerate(result.folds):
        if (f.repeat, f.fold) == (repeat, fold):
            return i
    repeats = max(f.repeat for f in result.folds) + 1
    folds = max(f.fold for f in result.folds) + 1
    raise NotRetained(f"fold {repeat}:{fold} out of range ({repeats} repeat(s) x {folds} fold(s))")


def fold_predictions(view: InspectionView) -> Table:
    """One row per test-set prediction: index, repeat, fold, y_true, y_pred.

    A view focused on a fold returns only that fold's rows.
    """
    preds = view.result.predictions
    if not preds:
        raise NotRetained("the result holds no predictions")
    if view.repeat is not None:
        preds = [p for p in preds if (p.repeat, p.fold) == (view.repeat, view.fold)]
    return Table(
        [
            ("index", [p.index for p in preds]),
            ("repeat", [p.repeat for p in preds]),
            ("fold", [p.fold for p in preds]),
            ("y_true", [p.y_true for p in preds]),
            ("y_pred", [p.y_pred for p in preds]),
        ]
    )


def fitted_params(view: InspectionView, repeat: int, fold: int) -> dict:
    """Step name -> kind, chosen hyperparameters and fitted state for one fold."""
    result = view.result
    if result.fitted_params is None:
        raise NotRetained("fitted parameters were not retained; rerun with retain enabled")
    i = _fold_position(result, repeat, fold)
    return copy.deepcopy(result.fitted_params[i]["steps"])
