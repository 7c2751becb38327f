"""Run configuration: every threshold and hyperparameter in one flat record.

Files may be JSON objects or ``key = value`` lines (``#`` comments allowed).
Lengths are millimetres only.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class Config:
    # region of interest
    crop_radius: float = 500.0
    upper_body_fraction: float = 0.73
    min_roi_points: int = 100
    # denoising
    knn_k: int = 10
    knn_dist: float = 50.0
    denoise: bool = True
    # head / body separation
    initial_split_offset: float = 150.0
    refined_split_offset: float = 175.0
    head_radius: float = 150.0
    body_radius: float = 250.0
    min_head_points: int = 20
    z_rule_window: int = 5
    z_rule_tolerance: float = 1.0
    # data cleaning
    discrepancy_xy: float = 100.0
    discrepancy_z: float = 100.0
    # features
    nose_points: int = 10
    nose_spread_deg: float = 120.0
    # random forest / RFE
    rf_trees: int = 30
    rf_min_leaf: int = 2
    rfe_step: int = 1
    rfe_in_fold: bool = True
    # MLP ensemble
    hidden1: int = 64
    hidden2: int = 32
    learning_rate: float = 3e-3
    batch_size: int = 64
    max_epochs: int = 300
    patience: int = 30
    weight_decay: float = 1e-3
    pool_size: int = 20
    ensemble_start: int = 3
    ensemble_max: int = 20
    val_fraction: float = 0.15
    min_subject_samples: int = 10
    # behaviour analysis
    region_half_width: float = 15.0
    contact_frames: int = 3
    exclusion_window: int = 20
    exclusion_quorum: int = 15
    two_sided: bool = True
    # run
    seed: int = 0
    workers: int = 1

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def snapshot(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path

    @classmethod
    def from_mapping(cls, values: dict) -> "Config":
        types = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(values) - set(types))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        default = cls()
        kwargs = {}
        for key, raw in values.items():
            kwargs[key] = _coerce(raw, type(getattr(default, key)), key)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "Config":
        text = Path(path).read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            return cls.from_mapping(json.loads(text))
        values = {}
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        return cls.from_mapping(values)


def _coerce(raw, kind, key):
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key!r}: not a boolean: {raw!r}")
    if kind is int:
        value = float(raw)
        if value != int(value):
            raise ValueError(f"config key {key!r}: not an integer: {raw!r}")
        return int(value)
    return kind(raw)


DEFAULT = Config()
