"""Random-forest importances and recursive feature elimination."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from .mlp import mae_deg

log = logging.getLogger(__name__)


@dataclass
class ForestModel:
    """Bagged regression trees (variance-reduction splits, sqrt(d) features per
    split) and their normalised impurity importances."""

    estimator: RandomForestRegressor | None
    importances: np.ndarray
    constant: float | None = None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.constant is not None:
            return np.full(len(X), self.constant)
        return self.estimator.predict(X)


def train_forest(X, y, n_trees: int = 60, seed: int = 0, min_leaf: int = 2) -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) < 20:
        raise ValueError("random forest needs at least 20 samples")
    if np.ptp(y) == 0:
        log.warning("train_forest: constant labels, all importances are zero")
        return ForestModel(None, np.zeros(X.shape[1]), float(y[0]))
    rf = RandomForestRegressor(n_estimators=n_trees, max_features="sqrt", bootstrap=True,
                               min_samples_leaf=min_leaf, random_state=seed, n_jobs=1)
    rf.fit(X, y)
    imp = np.asarray(rf.feature_importances_, dtype=float)
    total = imp.sum()
    imp = imp / total if total > 0 else np.zeros_like(imp)
    return ForestModel(rf, imp)


@dataclass
class RfeStep:
    active: tuple[int, ...]
    val_mae: float
    eliminated: tuple[int, ...]


@dataclass
class RfeTrace:
    steps: list[RfeStep]
    selected: tuple[int, ...]

    @property
    def dims(self) -> list[int]:
        return [len(s.active) for s in self.steps]

    @property
    def maes(self) -> list[float]:
        return [s.val_mae for s in self.steps]

    def mae_at(self, n_features: int) -> float:
        for s in self.steps:
            if len(s.active) == n_features:
                return s.val_mae
        raise KeyError(n_features)

    def to_rows(self, names=None) -> list[dict]:
        rows = []
        for s in self.steps:
            dropped = [names[i] if names else str(i) for i in s.eliminated]
            rows.append({"n_features": len(s.active), "val_mae": s.val_mae,
                         "eliminated": ";".join(dropped)})
        return rows


def rf_rfe(X_train, y_train, X_val, y_val, step: int = 1, seed: int = 0,
           n_trees: int = 60, min_leaf: int = 2) -> RfeTrace:
    """Recursive elimination driven by forest importances.

    Each iteration fits a forest on the active columns, records its
    validation MAE, then drops the ``step`` least important active features
    (ties go to the lowest column index). The selected set minimises the
    validation MAE, preferring the smaller set on ties.
    """
    X_train = np.asarray(X_train, dtype=float)
    X_val = np.asarray(X_val, dtype=float)
    d = X_train.shape[1]
    if d < 2:
        raise ValueError("RFE needs at least two features")
    active = list(range(d))
    steps: list[RfeStep] = []
    while active:
        forest = train_forest(X_train[:, active], y_train, n_trees, seed, min_leaf)
        mae = mae_deg(forest.predict(X_val[:, active]), y_val)
        k = min(step, len(active))
        order = np.lexsort((np.asarray(active), forest.importances))
        drop = tuple(sorted(active[i] for i in order[:k]))
        steps.append(RfeStep(tuple(active), mae, drop))
        active = [a for a in active if a not in drop]
    best = min(range(len(steps)), key=lambda i: (steps[i].val_mae, len(steps[i].active)))
    return RfeTrace(steps, steps[best].active)
