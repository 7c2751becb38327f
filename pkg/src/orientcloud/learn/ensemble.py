"""Forward subset selection over a ranked pool, prediction and model bundles."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import normalize_angle
from ..features import FeatureSchema
from .mlp import MlpModel, Standardizer, mae_deg

BUNDLE_FORMAT = "orientcloud-model/1"


class SchemaMismatch(ValueError):
    pass


@dataclass
class Ensemble:
    members: list[MlpModel]
    schema: FeatureSchema
    selected: tuple[int, ...]
    val_mae: float = float("nan")
    history: list[tuple[int, float]] = field(default_factory=list)
    pool_ranking: list[tuple[int, float]] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def schema_hash(self) -> str:
        return self.schema.hash

    @property
    def initial_val_mae(self) -> float:
        return self.history[0][1] if self.history else float("nan")


def member_mean(members, X) -> np.ndarray:
    return np.mean([m.predict_raw(X) for m in members], axis=0)


def build_ensemble(pool: list[MlpModel], X_val, y_val, schema: FeatureSchema,
                   selected, start: int = 3, max_size: int = 20) -> Ensemble:
    """Grow an ensemble from the best ``start`` pool members.

    Members are ranked by their own validation MAE; the next-ranked model is
    added only if it strictly lowers the ensemble's validation MAE, and the
    first failure stops the walk.
    """
    if len(pool) < start:
        raise ValueError(f"pool of {len(pool)} models is smaller than {start}")
    ranked = sorted(range(len(pool)), key=lambda i: (pool[i].val_mae, i))
    outputs = [pool[i].predict_raw(X_val) for i in ranked]
    members = list(ranked[:start])
    total = np.sum(outputs[:start], axis=0)
    cur = mae_deg(total / start, y_val)
    history = [(start, cur)]
    for pos in range(start, min(len(ranked), max_size)):
        trial_total = total + outputs[pos]
        trial = mae_deg(trial_total / (len(members) + 1), y_val)
        if not trial < cur:
            break
        members.append(ranked[pos])
        total, cur = trial_total, trial
        history.append((len(members), cur))
    return Ensemble([pool[i] for i in members], schema, tuple(selected), cur, history,
                    [(i, pool[i].val_mae) for i in ranked])


def predict(ensemble: Ensemble, X, schema: FeatureSchema | str | None = None) -> np.ndarray:
    """Ensemble yaw in ``[-180, 180)`` for full-schema feature rows."""
    if schema is not None:
        h = schema if isinstance(schema, str) else schema.hash
        if h != ensemble.schema_hash:
            raise SchemaMismatch(f"features use schema {h}, model expects "
                                 f"{ensemble.schema_hash}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(ensemble.schema):
        raise SchemaMismatch(f"expected {len(ensemble.schema)} feature columns, got {X.shape[1]}")
    return normalize_angle(member_mean(ensemble.members, X[:, list(ensemble.selected)]))


def bundle_dict(ensemble: Ensemble) -> dict:
    std = ensemble.members[0].standardizer
    return {
        "format": BUNDLE_FORMAT,
        "schema": ensemble.schema.to_json(),
        "schema_hash": ensemble.schema_hash,
        "selected": [ensemble.schema.names[i] for i in ensemble.selected],
        "standardizer": std.to_json(),
        "val_mae": ensemble.val_mae,
        "history": [list(h) for h in ensemble.history],
        "pool_ranking": [list(r) for r in ensemble.pool_ranking],
        "config": ensemble.config,
        "seeds": [m.seed for m in ensemble.members],
        "members": [m.to_json() for m in ensemble.members],
    }


def save_bundle(ensemble: Ensemble, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle_dict(ensemble), sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_bundle(path) -> Ensemble:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"{path}: not a {BUNDLE_FORMAT} bundle")
    schema = FeatureSchema.from_json(obj["schema"])
    if schema.hash != obj["schema_hash"]:
        raise SchemaMismatch("bundle schema hash does not match its schema")
    std = Standardizer.from_json(obj["standardizer"])
    members = [MlpModel.from_json(m, std) for m in obj["members"]]
    selected = tuple(schema.names.index(n) for n in obj["selected"])
    return Ensemble(members, schema, selected, float(obj["val_mae"]),
                    [tuple(h) for h in obj["history"]],
                    [tuple(r) for r in obj["pool_ranking"]], obj.get("config", {}))
