from .ensemble import (Ensemble, SchemaMismatch, build_ensemble, load_bundle, predict,
                       save_bundle)
from .forest import ForestModel, RfeTrace, rf_rfe, train_forest
from .mlp import MlpModel, Standardizer, TrainingDiverged, loss_and_grad, train_mlp
from .protocol import (Dataset, FitResult, LosoResult, dataset_from_table, derive_seed,
                       fit_model, leave_one_subject_out, stratified_split)

__all__ = [
    "Dataset", "Ensemble", "FitResult", "ForestModel", "LosoResult", "MlpModel",
    "RfeTrace", "SchemaMismatch", "Standardizer", "TrainingDiverged", "build_ensemble",
    "dataset_from_table", "derive_seed", "fit_model", "leave_one_subject_out",
    "load_bundle", "loss_and_grad", "predict", "rf_rfe", "save_bundle", "stratified_split",
    "train_forest", "train_mlp",
]
