"""Datasets, the per-fold training recipe and leave-one-subject-out evaluation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..config import DEFAULT, Config
from ..core import DataError, angle_diff, normalize_angle
from ..features import FeatureSchema
from .ensemble import Ensemble, build_ensemble, predict
from .forest import RfeTrace, rf_rfe
from .mlp import MlpModel, Standardizer, mae_deg, train_mlp

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    schema: FeatureSchema
    row_ids: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.groups = np.asarray(self.groups).astype(str)
        if not (len(self.X) == len(self.y) == len(self.groups)):
            raise DataError("feature, label and group counts differ")
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema):
            raise DataError("feature matrix does not match schema")
        if np.any((self.y < -180) | (self.y >= 180)):
            raise DataError("labels must lie in [-180, 180)")
        if self.row_ids is None:
            self.row_ids = np.arange(len(self.X))

    def __len__(self) -> int:
        return len(self.X)

    @property
    def subjects(self) -> list[str]:
        return sorted(set(self.groups.tolist()))

    def take(self, mask_or_idx) -> "Dataset":
        idx = np.asarray(mask_or_idx)
        return Dataset(self.X[idx], self.y[idx], self.groups[idx], self.schema,
                       self.row_ids[idx])


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


def stratified_split(groups, fraction: float, seed: int):
    """Boolean validation mask taking ``fraction`` of each group's rows (>= 1)."""
    groups = np.asarray(groups).astype(str)
    rng = np.random.default_rng(seed)
    val = np.zeros(len(groups), dtype=bool)
    for g in sorted(set(groups.tolist())):
        idx = np.flatnonzero(groups == g)
        k = max(1, int(round(fraction * len(idx))))
        if k >= len(idx):
            continue
        val[rng.permutation(idx)[:k]] = True
    return val


@dataclass
class FitResult:
    ensemble: Ensemble
    rfe: RfeTrace | None
    pool: list[MlpModel]
    train_rows: np.ndarray
    val_rows: np.ndarray


def _train_member(fit: Dataset, val: Dataset, cols, seed, cfg, std):
    return train_mlp(fit.X[:, cols], fit.y, val.X[:, cols], val.y, seed, cfg, std)


def fit_model(train: Dataset, cfg: Config = DEFAULT, seed: int | None = None,
              selected=None, run_rfe: bool | None = None) -> FitResult:
    """Training recipe used by every fold: validation carve-out, optional RF-RFE,
    a seeded pool of networks and forward subset selection.

    Everything (standardisation, feature selection, ranking) is computed from
    ``train`` only.
    """
    seed = cfg.seed if seed is None else seed
    run_rfe = cfg.rfe_in_fold if run_rfe is None else run_rfe
    val_mask = stratified_split(train.groups, cfg.val_fraction, derive_seed(seed, 1))
    fit, val = train.take(~val_mask), train.take(val_mask)
    trace = None
    if selected is None and run_rfe:
        trace = rf_rfe(fit.X, fit.y, val.X, val.y, cfg.rfe_step, derive_seed(seed, 2),
                       cfg.rf_trees, cfg.rf_min_leaf)
        selected = trace.selected
    elif selected is None:
        selected = tuple(range(train.X.shape[1]))
    cols = list(selected)
    std = Standardizer.fit(fit.X[:, cols])
    seeds = [derive_seed(seed, 3, k) for k in range(cfg.pool_size)]
    if cfg.workers > 1:
        pool = Parallel(n_jobs=cfg.workers)(
            delayed(_train_member)(fit, val, cols, s, cfg, std) for s in seeds)
    else:
        pool = [_train_member(fit, val, cols, s, cfg, std) for s in seeds]
    ens = build_ensemble(pool, val.X[:, cols], val.y, train.schema, selected,
                         cfg.ensemble_start, cfg.ensemble_max)
    ens.config = cfg.to_dict()
    return FitResult(ens, trace, pool, fit.row_ids, val.row_ids)


@dataclass
class FoldResult:
    subject: str
    n_test: int
    mae: float
    ensemble_size: int
    initial_val_mae: float
    final_val_mae: float
    n_selected: int
    predictions: np.ndarray
    labels: np.ndarray
    rfe: RfeTrace | None = None
    fit: FitResult | None = None


@dataclass
class LosoResult:
    folds: list[FoldResult]
    excluded: list[str] = field(default_factory=list)

    @property
    def per_subject(self) -> dict[str, float]:
        return {f.subject: f.mae for f in self.folds}

    @property
    def overall_mae(self) -> float:
        return float(np.mean([f.mae for f in self.folds]))

    def table(self) -> list[dict]:
        rows = [{"subject": f.subject, "n_test": f.n_test, "mae": f.mae,
                 "ensemble_size": f.ensemble_size, "n_features": f.n_selected,
                 "val_mae_initial": f.initial_val_mae, "val_mae_final": f.final_val_mae}
                for f in self.folds]
        rows.append({"subject": "mean", "n_test": sum(f.n_test for f in self.folds),
                     "mae": self.overall_mae, "ensemble_size": "", "n_features": "",
                     "val_mae_initial": "", "val_mae_final": ""})
        return rows


def _run_fold(data: Dataset, subject: str, k: int, cfg: Config, selected) -> FoldResult:
    test_mask = data.groups == subject
    train, test = data.take(~test_mask), data.take(test_mask)
    res = fit_model(train, cfg.replace(workers=1), derive_seed(cfg.seed, 100, k), selected)
    pred = predict(res.ensemble, test.X)
    mae = float(np.mean(np.abs(angle_diff(pred, test.y))))
    ens = res.ensemble
    return FoldResult(subject, len(test), mae, len(ens), ens.initial_val_mae, ens.val_mae,
                      len(ens.selected), pred, test.y, res.rfe, res)


def leave_one_subject_out(data: Dataset, cfg: Config = DEFAULT, selected=None) -> LosoResult:
    """Each subject is tested once by a model trained on all other subjects.

    Subjects with fewer than ``cfg.min_subject_samples`` rows are excluded.
    Folds may run in parallel (``cfg.workers``); results are ordered by
    subject regardless.
    """
    counts = {s: int(np.sum(data.groups == s)) for s in data.subjects}
    excluded = [s for s, n in counts.items() if n < cfg.min_subject_samples]
    for s in excluded:
        log.warning("subject %s has %d samples, excluded from evaluation", s, counts[s])
    keep = ~np.isin(data.groups, excluded)
    data = data.take(keep)
    subjects = data.subjects
    if len(subjects) < 3:
        raise DataError("leave-one-subject-out needs at least 3 subjects")
    jobs = [(s, k) for k, s in enumerate(subjects)]
    if cfg.workers > 1:
        folds = Parallel(n_jobs=cfg.workers)(
            delayed(_run_fold)(data, s, k, cfg, selected) for s, k in jobs)
    else:
        folds = [_run_fold(data, s, k, cfg, selected) for s, k in jobs]
    return LosoResult(list(folds), excluded)


def dataset_from_table(table) -> Dataset:
    """Labelled rows of a :class:`~orientcloud.pipeline.FeatureTable`."""
    y = np.array([m["head_yaw"] if m["head_yaw"] is not None else np.nan for m in table.meta],
                 dtype=float)
    ok = np.isfinite(y)
    if not ok.any():
        raise DataError("feature table has no labels")
    groups = np.array([m["subject"] for m in table.meta])
    return Dataset(table.X[ok], normalize_angle(y[ok]), groups[ok], table.schema,
                   np.flatnonzero(ok))
