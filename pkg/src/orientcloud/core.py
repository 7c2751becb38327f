"""Domain types, angle conventions, session ingestion and stitching.

Conventions used throughout the package:

* all lengths are millimetres in the room frame (z up, z = 0 at the floor);
* absolute yaw is measured counter-clockwise from the room +x axis;
* subject-relative angles are positive to the subject's left;
* every angle is normalised into ``[-180, 180)`` degrees.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SESSION_FORMAT = "orient-cloud/1"

_UNIT_SCALE = {"mm": 1.0, "cm": 10.0, "m": 1000.0}


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


class GeometryError(ValueError):
    """Raised when a geometric quantity is undefined for the given input."""


def normalize_angle(deg):
    """Wrap degrees into ``[-180, 180)``. Works on scalars and arrays."""
    wrapped = np.mod(np.asarray(deg, dtype=float) + 180.0, 360.0) - 180.0
    # np.mod can return 360.0 - tiny for inputs just below a multiple of 360
    wrapped = np.where(wrapped >= 180.0, wrapped - 360.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angle_diff(a, b):
    """Signed smallest difference ``a - b`` in degrees."""
    return normalize_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def circular_mean(angles: Iterable[float]) -> float:
    """Mean direction of a set of angles (degrees), via unit vectors."""
    rad = np.deg2rad(np.asarray(list(angles), dtype=float))
    s, c = np.sin(rad).sum(), np.cos(rad).sum()
    if math.hypot(s, c) < 1e-12:
        raise GeometryError("circular mean undefined for opposed angles")
    return normalize_angle(math.degrees(math.atan2(s, c)))


def bearing(origin, target) -> float:
    """Absolute yaw (degrees) of the horizontal ray ``origin -> target``.

    Only the first two coordinates are used.

    Raises
    ------
    GeometryError
        If the two positions are closer than 1 mm in the XY plane.
    """
    dx = float(target[0]) - float(origin[0])
    dy = float(target[1]) - float(origin[1])
    if math.hypot(dx, dy) <= 1.0:
        raise GeometryError("bearing undefined for coincident XY positions")
    return normalize_angle(math.degrees(math.atan2(dy, dx)))


def rotation_z(deg: float) -> np.ndarray:
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Extrinsics:
    """Rigid sensor-to-room transform ``p' = R p + t`` (mm)."""

    sensor_id: str
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(r.T @ r, np.eye(3), rtol=0.0, atol=1e-9):
            raise DataError(f"rotation of sensor {self.sensor_id!r} is not orthonormal")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise DataError(f"non-finite extrinsics for sensor {self.sensor_id!r}")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, sensor_id: str) -> "Extrinsics":
        return cls(sensor_id, np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return pts @ self.rotation.T + self.translation

    def to_json(self) -> dict:
        return {
            "id": self.sensor_id,
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }


def stitch(raw_per_sensor: Mapping[str, np.ndarray],
           extrinsics: Mapping[str, Extrinsics] | Sequence[Extrinsics]) -> np.ndarray:
    """Map every sensor's points into the room frame and concatenate them.

    Sensors are concatenated in the iteration order of ``raw_per_sensor``.
    """
    if not isinstance(extrinsics, Mapping):
        extrinsics = {e.sensor_id: e for e in extrinsics}
    parts = []
    for sensor_id, pts in raw_per_sensor.items():
        if sensor_id not in extrinsics:
            raise DataError(f"no extrinsics for sensor {sensor_id!r}")
        parts.append(extrinsics[sensor_id].apply(pts))
    if not parts:
        return np.empty((0, 3))
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class SubjectDetection:
    """Output of the sensor's built-in human detector for one person.

    ``cx, cy`` is the detected centre of gravity; ``z1, z2`` are the two
    sensors' estimates of the top of the head.
    """

    subject_id: str
    cx: float
    cy: float
    z1: float
    z2: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.z1, self.z2)
        if not all(math.isfinite(float(v)) for v in vals):
            raise DataError(f"non-finite detection for {self.subject_id!r}")
        if self.z1 <= 0 or self.z2 <= 0:
            raise DataError(f"head heights must be positive for {self.subject_id!r}")

    @property
    def z_mean(self) -> float:
        return 0.5 * (self.z1 + self.z2)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.cx, self.cy], dtype=float)

    def to_json(self) -> dict:
        return {"id": self.subject_id, "cx": self.cx, "cy": self.cy,
                "z1": self.z1, "z2": self.z2}


@dataclass(frozen=True, eq=False)
class PointCloudFrame:
    timestamp: float
    points: np.ndarray
    detections: tuple[SubjectDetection, ...] = ()
    line_number: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "detections", tuple(self.detections))
        ids = [d.subject_id for d in self.detections]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate subject id within one frame")

    def detection(self, subject_id: str) -> SubjectDetection | None:
        for det in self.detections:
            if det.subject_id == subject_id:
                return det
        return None

    def same_points(self, other: "PointCloudFrame | None") -> bool:
        """Exact byte equality of the two point sets."""
        if other is None or other.points.shape != self.points.shape:
            return False
        return self.points.tobytes() == other.points.tobytes()


@dataclass(frozen=True)
class Violation:
    line: int
    message: str


@dataclass
class SessionRecording:
    frames: list[PointCloudFrame]
    sensors: list[Extrinsics] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    @property
    def subject_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for fr in self.frames:
            for det in fr.detections:
                seen.setdefault(det.subject_id, None)
        return list(seen)


def _finite_points(raw, scale: float) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.size == 0:
        raise DataError("empty point list")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataError("points must be a list of [x, y, z] triples")
    if not np.all(np.isfinite(arr)):
        raise DataError("non-finite coordinate")
    return arr * scale


def _parse_frame(obj: dict, scale: float, sensors: dict[str, Extrinsics],
                 line_no: int) -> PointCloudFrame:
    if not isinstance(obj, dict):
        raise DataError("frame line is not a JSON object")
    for key in ("t", "detections"):
        if key not in obj:
            raise DataError(f"missing field {key!r}")
    t = float(obj["t"])
    if not math.isfinite(t):
        raise DataError("non-finite timestamp")
    if "points" in obj:
        points = _finite_points(obj["points"], scale)
    elif "raw" in obj:
        raw = {sid: _finite_points(p, scale) for sid, p in obj["raw"].items()}
        points = stitch(raw, sensors)
    else:
        raise DataError("missing field 'points'")
    dets = []
    for d in obj["detections"]:
        try:
            dets.append(SubjectDetection(
                str(d["id"]), float(d["cx"]) * scale, float(d["cy"]) * scale,
                float(d["z1"]) * scale, float(d["z2"]) * scale))
        except KeyError as exc:
            raise DataError(f"detection missing field {exc.args[0]!r}") from None
    return PointCloudFrame(t, points, tuple(dets), line_no)


def parse_session_lines(lines: Iterable[str]) -> SessionRecording:
    """Parse the JSON-lines session format from an iterable of text lines.

    Malformed frame lines are skipped and reported in ``violations`` with
    their 1-based line numbers. A missing or invalid header, or a session
    without any valid frame, raises :class:`DataError`.
    """
    it = iter(lines)
    header_line = None
    line_no = 0
    for line_no, header_line in enumerate(it, start=1):
        if header_line.strip():
            break
    if header_line is None or not header_line.strip():
        raise DataError("empty session")
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {line_no}: invalid header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != SESSION_FORMAT:
        raise DataError(f"line {line_no}: header must declare format {SESSION_FORMAT!r}")
    units = header.get("units", "mm")
    if units not in _UNIT_SCALE:
        raise DataError(f"unsupported units {units!r}")
    scale = _UNIT_SCALE[units]
    sensors = []
    for s in header.get("sensors", []):
        sensors.append(Extrinsics(str(s["id"]), s["rotation"],
                                  np.asarray(s["translation"], dtype=float) * scale))
    by_id = {s.sensor_id: s for s in sensors}
    metadata = {k: v for k, v in header.items()
                if k not in ("format", "units", "sensors")}

    frames: list[PointCloudFrame] = []
    violations: list[Violation] = []
    for line_no, line in enumerate(it, start=line_no + 1):
        if not line.strip():
            continue
        try:
            frames.append(_parse_frame(json.loads(line), scale, by_id, line_no))
        except (json.JSONDecodeError, DataError, TypeError, ValueError) as exc:
            violations.append(Violation(line_no, str(exc)))

    frames.sort(key=lambda f: f.timestamp)
    ordered: list[PointCloudFrame] = []
    for fr in frames:
        if ordered and fr.timestamp <= ordered[-1].timestamp:
            violations.append(Violation(fr.line_number or 0, "duplicate timestamp"))
            continue
        ordered.append(fr)
    violations.sort(key=lambda v: v.line)
    if not ordered:
        raise DataError("session contains no valid frames")
    return SessionRecording(ordered, sensors, metadata, violations)


def parse_session(path) -> SessionRecording:
    with open(path, encoding="utf-8") as fh:
        return parse_session_lines(fh)


def _point_rows(points: np.ndarray) -> list:
    return [[float(v) for v in row] for row in points]


def serialize_session(session: SessionRecording) -> str:
    header = {"format": SESSION_FORMAT, "units": "mm",
              "sensors": [s.to_json() for s in session.sensors]}
    header.update(session.metadata)
    out = [json.dumps(header, allow_nan=False)]
    for fr in session.frames:
        out.append(json.dumps({
            "t": float(fr.timestamp),
            "points": _point_rows(fr.points),
            "detections": [d.to_json() for d in fr.detections],
        }, allow_nan=False))
    return "\n".join(out) + "\n"


def write_session(session: SessionRecording, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_session(session))
    return path
