"""Region-of-interest extraction, denoising, head correction and frame checks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .config import DEFAULT, Config
from .core import DataError, GeometryError, PointCloudFrame, SubjectDetection
from .geometry import fit_ellipse_direct

log = logging.getLogger(__name__)


class UnusableFrame(DataError):
    """A frame that cannot be processed for a subject; ``reason`` is a short tag."""

    def __init__(self, reason: str, message: str | None = None):
        super().__init__(message or reason)
        self.reason = reason


@dataclass(frozen=True)
class HeadPosition:
    head_center: tuple[float, float]
    z_head: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SplitClouds:
    pc_head: np.ndarray
    pc_body: np.ndarray
    threshold: float
    head_center: tuple[float, float] | None = None
    body_center: tuple[float, float] | None = None


@dataclass(frozen=True)
class ValidationReport:
    repeated_frame: bool
    head_discrepancy_xy: float
    head_discrepancy_z: float
    rejected: bool
    reason: str | None = None
    reasons: tuple[str, ...] = field(default=())


def _xy_dist(points: np.ndarray, center) -> np.ndarray:
    return np.hypot(points[:, 0] - center[0], points[:, 1] - center[1])


def crop_roi(points, center_xy, z_head: float, cfg: Config = DEFAULT) -> np.ndarray:
    """Cylinder crop around ``center_xy`` keeping the top of the seated body.

    Keeps points within ``cfg.crop_radius`` (XY) and at or above
    ``cfg.upper_body_fraction * z_head``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    keep = (_xy_dist(pts, center_xy) <= cfg.crop_radius) & \
        (pts[:, 2] >= cfg.upper_body_fraction * z_head)
    out = pts[keep]
    if len(out) < cfg.min_roi_points:
        raise UnusableFrame("sparse_roi", f"only {len(out)} points in region of interest")
    return out


def mean_knn_distance(points, k: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    dist, _ = cKDTree(pts).query(pts, k=k + 1)
    # column 0 is the point itself (or an exact duplicate, also at distance 0)
    return dist[:, 1:].mean(axis=1)


def knn_denoise(points, k: int = 10, dist_threshold: float = 50.0) -> np.ndarray:
    """Drop points whose mean distance to their ``k`` nearest neighbours exceeds
    ``dist_threshold``. Single pass; neighbours come from the input cloud."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) <= k:
        log.warning("knn_denoise: %d points <= k=%d, returning input unchanged", len(pts), k)
        return pts
    return pts[mean_knn_distance(pts, k) <= dist_threshold]


def initial_split(points, z1: float, z2: float, cfg: Config = DEFAULT) -> SplitClouds:
    """Split at the mean built-in head height minus ``cfg.initial_split_offset``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    z = 0.5 * (z1 + z2) - cfg.initial_split_offset
    return _split_at(pts, z)


def _split_at(pts: np.ndarray, z: float) -> SplitClouds:
    is_head = pts[:, 2] >= z
    head, body = pts[is_head], pts[~is_head]
    if len(head) == 0:
        raise UnusableFrame("empty_head", "empty head partition")
    if len(body) == 0:
        raise UnusableFrame("empty_body", "empty body partition")
    return SplitClouds(head, body, float(z))


def apex_height(points, cfg: Config = DEFAULT) -> tuple[float, bool]:
    """Top-of-head height by the saturation rule.

    Scans points by descending z and returns the first whose height exceeds
    the point ``cfg.z_rule_window`` ranks lower by at most
    ``cfg.z_rule_tolerance``. Falls back to the median of the 10 highest
    points; the boolean is True when the fallback was used.
    """
    z = np.sort(np.asarray(points, dtype=float).reshape(-1, 3)[:, 2])[::-1]
    w = cfg.z_rule_window
    if len(z) > w:
        ok = np.flatnonzero(z[:-w] - z[w:] <= cfg.z_rule_tolerance)
        if ok.size:
            return float(z[ok[0]]), False
    return float(np.median(z[:10])), True


def correct_head_position(pc_head, cfg: Config = DEFAULT) -> HeadPosition:
    """Head centre from an ellipse fit of the projected head points, plus z_head.

    Degenerate projections fall back to the XY centroid and an unsatisfied
    height rule falls back to the median of the 10 highest points; both set
    a flag.
    """
    pts = np.asarray(pc_head, dtype=float).reshape(-1, 3)
    if len(pts) < cfg.min_head_points:
        raise UnusableFrame("sparse_head", f"only {len(pts)} head points")
    flags = []
    try:
        center = fit_ellipse_direct(pts[:, :2]).center
        if not np.all(np.isfinite(center)):
            raise GeometryError("non-finite ellipse center")
    except GeometryError:
        center = tuple(float(v) for v in pts[:, :2].mean(axis=0))
        flags.append("center_fallback")
    z_head, fallback = apex_height(pts, cfg)
    if fallback:
        flags.append("z_fallback")
    return HeadPosition((float(center[0]), float(center[1])), z_head, tuple(flags))


def refined_split(points, head: HeadPosition, cfg: Config = DEFAULT) -> SplitClouds:
    """Split at ``z_head - cfg.refined_split_offset`` and apply the radial filters.

    Head points farther than ``cfg.head_radius`` from the head centre and body
    points farther than ``cfg.body_radius`` from the body centroid (XY) are
    dropped.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    z = head.z_head - cfg.refined_split_offset
    is_head = pts[:, 2] >= z
    head_pts = pts[is_head]
    head_pts = head_pts[_xy_dist(head_pts, head.head_center) <= cfg.head_radius]
    body_pts = pts[~is_head]
    if len(head_pts) == 0:
        raise UnusableFrame("empty_head", "empty head partition")
    if len(body_pts) == 0:
        raise UnusableFrame("empty_body", "empty body partition")
    body_center = body_pts[:, :2].mean(axis=0)
    body_pts = body_pts[_xy_dist(body_pts, body_center) <= cfg.body_radius]
    if len(body_pts) == 0:
        raise UnusableFrame("empty_body", "empty body partition")
    return SplitClouds(head_pts, body_pts, float(z), head.head_center,
                       (float(body_center[0]), float(body_center[1])))


def validate_frame(frame: PointCloudFrame, prev_frame: PointCloudFrame | None,
                   built_in: SubjectDetection, corrected: HeadPosition | None,
                   cfg: Config = DEFAULT) -> ValidationReport:
    """Data-cleaning checks: replayed frames and built-in vs corrected head position."""
    repeated = frame.same_points(prev_frame)
    reasons = []
    if repeated:
        reasons.append("repeat")
    dxy = dz = math.nan
    if corrected is not None:
        dxy = math.hypot(corrected.head_center[0] - built_in.cx,
                         corrected.head_center[1] - built_in.cy)
        dz = corrected.z_head - built_in.z_mean
        if dxy > cfg.discrepancy_xy:
            reasons.append("xy discrepancy")
        if abs(dz) > cfg.discrepancy_z:
            reasons.append("z discrepancy")
    return ValidationReport(repeated, dxy, dz, bool(reasons),
                            reasons[0] if reasons else None, tuple(reasons))
