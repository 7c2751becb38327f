"""Per-frame orchestration: detection -> clean clouds -> body yaw -> features."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import preprocess as pp
from .config import DEFAULT, Config
from .core import DataError, GeometryError, PointCloudFrame, SessionRecording
from .features import DEFAULT_SCHEMA, FeatureSchema, extract_features
from .geometry import (BodyOrientation, EllipseFit, QuadrantPartition, body_orientation,
                       fit_ellipse_direct, partition_quadrants)

log = logging.getLogger(__name__)


@dataclass
class SubjectFrameResult:
    subject_id: str
    timestamp: float
    index: int
    head: pp.HeadPosition | None = None
    split: pp.SplitClouds | None = None
    body: BodyOrientation | None = None
    quadrants: QuadrantPartition | None = None
    head_ellipse: EllipseFit | None = None
    features: np.ndarray | None = None
    validation: pp.ValidationReport | None = None
    flags: list[str] = field(default_factory=list)
    error: str | None = None
    n_roi: int = 0

    @property
    def usable(self) -> bool:
        return self.error is None and not (self.validation and self.validation.rejected)

    @property
    def status(self) -> str:
        if self.error is not None:
            return self.error
        if self.validation is not None and self.validation.rejected:
            return self.validation.reason or "rejected"
        return "ok"


def _clean(points, center_xy, z_head, cfg: Config):
    roi = pp.crop_roi(points, center_xy, z_head, cfg)
    if cfg.denoise:
        roi = pp.knn_denoise(roi, cfg.knn_k, cfg.knn_dist)
    return roi


def locate_head(points, det, cfg: Config = DEFAULT):
    """Bootstrap crop, initial split and head correction for one detection.

    When the built-in height leaves too few points above the initial split
    (e.g. it overestimates the head), the split is re-anchored on the apex of
    the cropped cloud and ``reanchored`` is reported.
    """
    flags = []
    roi = _clean(points, det.xy, det.z_mean, cfg)
    try:
        split = pp.initial_split(roi, det.z1, det.z2, cfg)
        thin = len(split.pc_head) < cfg.min_head_points
    except pp.UnusableFrame as exc:
        if exc.reason != "empty_head":
            raise
        thin = True
    if thin:
        apex, _ = pp.apex_height(roi, cfg)
        split = pp._split_at(roi, apex - cfg.initial_split_offset)
        flags.append("reanchored")
    head = pp.correct_head_position(split.pc_head, cfg)
    return head, split, flags


def process_subject(frame: PointCloudFrame, subject_id: str,
                    prev_frame: PointCloudFrame | None = None, cfg: Config = DEFAULT,
                    schema: FeatureSchema = DEFAULT_SCHEMA, index: int = 0,
                    features: bool = True) -> SubjectFrameResult:
    res = SubjectFrameResult(subject_id, frame.timestamp, index)
    det = frame.detection(subject_id)
    if det is None:
        res.error = "no_detection"
        return res
    try:
        head, _, flags = locate_head(frame.points, det, cfg)
        res.head = head
        res.flags += flags + list(head.flags)
        roi = _clean(frame.points, det.xy, head.z_head, cfg)
        res.n_roi = len(roi)
        split = pp.refined_split(roi, head, cfg)
        res.split = split
        res.body = body_orientation(split.pc_body, split.pc_head, head.head_center)
        if res.body.tie:
            res.flags.append("facing_tie")
        res.quadrants = partition_quadrants(split.pc_head, res.body.ellipse, res.body.yaw)
        if features:
            res.head_ellipse = fit_ellipse_direct(split.pc_head[:, :2])
            centroid = np.vstack([split.pc_head, split.pc_body])[:, :2].mean(axis=0)
            res.features, fflags = extract_features(
                split.pc_head, res.quadrants, res.body, res.head_ellipse, centroid,
                head.head_center, head.z_head, schema, cfg.nose_points,
                cfg.nose_spread_deg)
            res.flags += list(fflags)
    except pp.UnusableFrame as exc:
        res.error = exc.reason
    except GeometryError as exc:
        res.error = "geometry"
        log.debug("frame %s/%s: %s", subject_id, index, exc)
    res.validation = pp.validate_frame(frame, prev_frame, det, res.head, cfg)
    return res


def process_session(session: SessionRecording, subject_id: str | None = None,
                    cfg: Config = DEFAULT, schema: FeatureSchema = DEFAULT_SCHEMA,
                    features: bool = True) -> list[SubjectFrameResult]:
    ids = [subject_id] if subject_id else session.subject_ids
    out = []
    prev = None
    for k, frame in enumerate(session.frames):
        for sid in ids:
            if frame.detection(sid) is None:
                continue
            out.append(process_subject(frame, sid, prev, cfg, schema, k, features))
        prev = frame
    return out


@dataclass
class FeatureTable:
    meta: list[dict]
    X: np.ndarray
    schema: FeatureSchema
    skipped: dict[str, int]


def build_feature_table(sessions: dict[str, SessionRecording], labels=None,
                        cfg: Config = DEFAULT,
                        schema: FeatureSchema = DEFAULT_SCHEMA) -> FeatureTable:
    """Features for every usable subject-frame, joined to labels when given.

    Labels are keyed by ``(session, frame index, subject)``. Frames that are
    unusable or rejected by the data-cleaning checks are counted in
    ``skipped`` by reason.
    """
    lab = {}
    for r in labels or []:
        lab[(r["session"], int(r["frame"]), r["subject"])] = r
    meta, rows, skipped = [], [], {}
    for name, sess in sessions.items():
        for res in process_session(sess, None, cfg, schema):
            key = (name, res.index, res.subject_id)
            if labels is not None and key not in lab:
                continue
            if not res.usable:
                skipped[res.status] = skipped.get(res.status, 0) + 1
                continue
            r = lab.get(key)
            meta.append({"session": name, "frame": res.index, "t": float(res.timestamp),
                         "subject": res.subject_id,
                         "head_yaw": float(r["head_yaw"]) if r else None,
                         "body_yaw_est": float(res.body.yaw)})
            rows.append(res.features)
    if not rows:
        raise DataError("no usable frames")
    return FeatureTable(meta, np.vstack(rows), schema, skipped)
