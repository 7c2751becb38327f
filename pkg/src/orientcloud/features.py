"""Geometric head features in a subject-centric frame.

The subject frame has its origin at the body-ellipse centre, +x along the
facing direction, +y to the subject's left, and z measured from the top of
the head (so values are negative below the crown).
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import GeometryError, normalize_angle
from .geometry import BodyOrientation, EllipseFit, QuadrantPartition, pca

FAMILIES = ("sensor_centroid", "head_stats", "head_pca", "quadrant_stats",
            "quadrant_pca", "nose", "head_ellipse")


@dataclass(frozen=True)
class FeatureSchema:
    version: str
    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        bad = {fam for _, fam in self.entries} - set(FAMILIES)
        if bad:
            raise ValueError(f"unknown feature families: {sorted(bad)}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    @property
    def families(self) -> list[str]:
        return [f for _, f in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def hash(self) -> str:
        payload = json.dumps({"version": self.version, "entries": self.entries})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def index(self, family: str) -> list[int]:
        return [i for i, (_, f) in enumerate(self.entries) if f == family]

    def to_json(self) -> dict:
        return {"version": self.version, "hash": self.hash,
                "names": self.names, "families": self.families}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        schema = cls(obj["version"], tuple(zip(obj["names"], obj["families"])))
        if "hash" in obj and obj["hash"] != schema.hash:
            raise ValueError("schema hash does not match its entries")
        return schema


def _default_entries():
    xyz = ("x", "y", "z")
    e = [("centroid_x", "sensor_centroid"), ("centroid_y", "sensor_centroid")]
    e += [(f"head_{s}_{a}", "head_stats") for s in ("mean", "std", "min", "max") for a in xyz]
    e += [(f"head_pca_eig{k}", "head_pca") for k in (1, 2, 3)]
    e += [(f"head_pca_v{k}_{a}", "head_pca") for k in (1, 2) for a in xyz]
    e += [(f"q{q}_{s}_{a}", "quadrant_stats") for q in range(1, 5)
          for s in ("mean", "std") for a in xyz]
    for q in range(1, 5):
        e += [(f"q{q}_pca_eig1", "quadrant_pca"), (f"q{q}_pca_eig2", "quadrant_pca"),
              (f"q{q}_pca_v1_x", "quadrant_pca"), (f"q{q}_pca_v1_y", "quadrant_pca"),
              (f"q{q}_frac", "quadrant_pca")]
    e += [("nose_x", "nose"), ("nose_y", "nose"), ("nose_bearing", "nose")]
    e += [("head_ell_major", "head_ellipse"), ("head_ell_minor", "head_ellipse"),
          ("head_ell_orientation", "head_ellipse"), ("head_ell_dx", "head_ellipse"),
          ("head_ell_dy", "head_ellipse")]
    return tuple(e)


DEFAULT_SCHEMA = FeatureSchema("subject-centric/1", _default_entries())


@dataclass(frozen=True)
class NoseEstimate:
    xy: tuple[float, float]
    flags: tuple[str, ...] = ()


def _arc_spread(angles_deg: np.ndarray) -> float:
    """Smallest arc (degrees) containing all the given directions."""
    a = np.sort(np.mod(angles_deg, 360.0))
    gaps = np.diff(np.concatenate([a, [a[0] + 360.0]]))
    return float(360.0 - gaps.max())


def estimate_nose(head_points_2d, head_center, n: int = 10,
                  max_spread: float = 120.0) -> NoseEstimate:
    """Centroid of the ``n`` head points farthest (XY) from ``head_center``.

    Distance ties at the cut are resolved by input order. With fewer than
    ``n`` points the centroid of all of them is returned (flag
    ``few_points``); if the selected points span more than ``max_spread``
    degrees around the head centre the estimate is flagged ``uninformative``.
    """
    pts = np.asarray(head_points_2d, dtype=float)[:, :2]
    c = np.asarray(head_center, dtype=float)
    flags = []
    if len(pts) == 0:
        raise GeometryError("nose estimate needs head points")
    if len(pts) < n:
        sel = pts
        flags.append("few_points")
    else:
        d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
        sel = pts[np.argsort(-d, kind="stable")[:n]]
    ang = np.degrees(np.arctan2(sel[:, 1] - c[1], sel[:, 0] - c[0]))
    if _arc_spread(ang) > max_spread:
        flags.append("uninformative")
    xy = sel.mean(axis=0)
    return NoseEstimate((float(xy[0]), float(xy[1])), tuple(flags))


class SubjectFrame:
    """Rigid map from the room frame into the subject-centric frame."""

    def __init__(self, origin_xy, facing_deg: float, z_ref: float):
        self.origin = np.asarray(origin_xy, dtype=float)
        self.facing = float(facing_deg)
        t = math.radians(facing_deg)
        self._fwd = np.array([math.cos(t), math.sin(t)])
        self._left = np.array([-self._fwd[1], self._fwd[0]])
        self.z_ref = float(z_ref)

    def xy(self, pts) -> np.ndarray:
        rel = np.asarray(pts, dtype=float)[..., :2] - self.origin
        return np.stack([rel @ self._fwd, rel @ self._left], axis=-1)

    def xyz(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return np.column_stack([self.xy(pts), pts[:, 2] - self.z_ref])

    def angle(self, deg: float) -> float:
        return normalize_angle(deg - self.facing)


def _stats(p: np.ndarray, which=("mean", "std", "min", "max")) -> list[float]:
    fn = {"mean": np.mean, "std": np.std, "min": np.min, "max": np.max}
    return [float(v) for w in which for v in fn[w](p, axis=0)]


def extract_features(pc_head, quadrants: QuadrantPartition, body: BodyOrientation,
                     head_ellipse: EllipseFit, sensor_centroid, head_center,
                     z_head: float, schema: FeatureSchema = DEFAULT_SCHEMA,
                     nose_points: int = 10,
                     nose_spread: float = 120.0) -> tuple[np.ndarray, tuple[str, ...]]:
    """Feature vector (ordered as ``schema``) and any flags raised on the way.

    Empty quadrants contribute zeros and a zero count fraction; quadrants
    with fewer than three points get zero PCA entries.
    """
    if schema.hash != DEFAULT_SCHEMA.hash:
        raise ValueError(f"no extractor registered for schema {schema.version!r}")
    frame = SubjectFrame(body.ellipse.center, body.yaw, z_head)
    head = frame.xyz(pc_head)
    if len(head) < 4:
        raise GeometryError("too few head points for features")
    flags: list[str] = []

    vals = [float(sensor_centroid[0]), float(sensor_centroid[1])]
    vals += _stats(head)
    hp = pca(head, 3)
    vals += [float(v) for v in hp.eigenvalues]
    vals += [float(v) for v in hp.eigenvectors[:, 0]]
    vals += [float(v) for v in hp.eigenvectors[:, 1]]

    total = len(head)
    q_pts = [frame.xyz(q) if len(q) else np.empty((0, 3)) for q in quadrants.quadrants]
    for q in q_pts:
        vals += _stats(q, ("mean", "std")) if len(q) else [0.0] * 6
    for q in q_pts:
        if len(q) >= 3:
            qp = pca(q, 2)
            vals += [float(qp.eigenvalues[0]), float(qp.eigenvalues[1]),
                     float(qp.eigenvectors[0, 0]), float(qp.eigenvectors[1, 0])]
        else:
            vals += [0.0] * 4
        vals.append(len(q) / total)

    hc = frame.xy(np.asarray(head_center, dtype=float))
    nose = estimate_nose(head[:, :2], hc, n=nose_points, max_spread=nose_spread)
    flags += [f"nose_{f}" for f in nose.flags]
    nb = math.degrees(math.atan2(nose.xy[1] - hc[1], nose.xy[0] - hc[0]))
    vals += [nose.xy[0], nose.xy[1], normalize_angle(nb)]

    ec = frame.xy(np.asarray(head_ellipse.center, dtype=float))
    orient = float(np.mod(head_ellipse.orientation - body.yaw + 90.0, 180.0) - 90.0)
    vals += [head_ellipse.semi_major, head_ellipse.semi_minor, orient,
             float(ec[0]), float(ec[1])]

    x = np.asarray(vals, dtype=float)
    if len(x) != len(schema):
        raise AssertionError(f"extractor produced {len(x)} values for {len(schema)} names")
    if not np.all(np.isfinite(x)):
        raise GeometryError("non-finite feature value")
    return x, tuple(flags)


# ------------------------------------------------------------------ file I/O

META_COLUMNS = ("session", "frame", "t", "subject", "head_yaw", "body_yaw_est")


def schema_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".schema.json")


def write_feature_csv(path, meta_rows, X, schema: FeatureSchema) -> Path:
    """CSV with metadata columns followed by one column per schema name,
    plus a ``<stem>.schema.json`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(META_COLUMNS) + schema.names)
        for meta, row in zip(meta_rows, X):
            w.writerow([_fmt(meta.get(c, "")) for c in META_COLUMNS] + [repr(float(v)) for v in row])
    schema_path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n", encoding="utf-8")
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def read_feature_csv(path):
    """Inverse of :func:`write_feature_csv`: ``(meta_rows, X, schema)``."""
    path = Path(path)
    schema = FeatureSchema.from_json(json.loads(schema_path(path).read_text(encoding="utf-8")))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_meta = len(META_COLUMNS)
        if header[n_meta:] != schema.names or tuple(header[:n_meta]) != META_COLUMNS:
            raise ValueError(f"{path}: header does not match schema {schema.version!r}")
        meta, rows = [], []
        for rec in reader:
            m = dict(zip(META_COLUMNS, rec[:n_meta]))
            m["frame"] = int(m["frame"])
            for k in ("t", "head_yaw", "body_yaw_est"):
                m[k] = float(m[k]) if m[k] != "" else math.nan
            meta.append(m)
            rows.append([float(v) for v in rec[n_meta:]])
    X = np.asarray(rows, dtype=float).reshape(len(rows), len(schema))
    return meta, X, schema
