"""Synthetic seated-subject point clouds with exact ground truth.

The generator models what the ceiling sensors see of a seated person: a
domed shoulder cap and elliptic torso wall (long axis shoulder to shoulder),
a neck, a head ellipsoid with a flattened crown and a nose cone, and
optional arm geometry. Surface samples facing away from both sensors are
culled. Everything is driven by ``numpy.random.default_rng(seed)``, so a
parameter set always reproduces the same cloud bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .core import (Extrinsics, PointCloudFrame, SessionRecording, SubjectDetection,
                   bearing, normalize_angle, rotation_z, write_session)

ROOM_SIZE = (3000.0, 3500.0)
SENSOR_POSITIONS = ((0.0, 0.0, 2600.0), (3000.0, 3500.0, 2600.0))
FPS = 1.5


@dataclass(frozen=True)
class SubjectParams:
    z_head: float = 1250.0
    shoulder_half_width: float = 200.0
    chest_half_depth: float = 120.0
    head_radius: float = 95.0
    nose_length: float = 25.0
    head_yaw_offset: float = 0.0
    body_yaw: float = 0.0
    arm_pose: str = "down"
    noise_sigma: float = 0.0
    outlier_fraction: float = 0.0
    seed: int = 0
    position: tuple[float, float] = (1500.0, 1750.0)
    head_forward: float = 80.0
    head_width_ratio: float = 0.8
    chin_depth: float = 140.0
    neck_gap: float = 155.0
    shoulder_drop: float = 290.0
    crown_clip: float = 5.0
    density: float = 0.0082
    head_density: float = 0.0045
    nose_density: float = 0.03
    builtin_z_error: float = 0.0
    builtin_z_spread: float = 20.0
    builtin_xy_error: tuple[float, float] = (0.0, 0.0)
    culling: bool = True
    subject_id: str = "S1"

    def __post_init__(self):
        if self.shoulder_half_width <= self.chest_half_depth:
            raise ValueError("shoulder half-width must exceed chest half-depth")
        if self.head_radius >= self.shoulder_half_width:
            raise ValueError("head radius must be smaller than shoulder half-width")
        if self.arm_pose not in ARM_POSES:
            raise ValueError(f"unknown arm pose {self.arm_pose!r}")

    @property
    def head_yaw(self) -> float:
        return normalize_angle(self.body_yaw + self.head_yaw_offset)


ARM_POSES = ("down", "hand_to_face", "crossed")


@dataclass(frozen=True)
class GroundTruth:
    body_yaw: float
    head_yaw: float
    head_center: tuple[float, float]
    z_head: float
    body_center: tuple[float, float]
    head_yaw_offset: float


# surface samplers in the subject-local frame (x forward, y left, z up).
# Each returns (points, outward normals).

def _sample_ellipsoid(rng, center, radii, n):
    u = rng.standard_normal((n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = np.asarray(radii, dtype=float)
    pts = np.asarray(center) + u * radii
    normals = u / radii
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return pts, normals


def _ellipsoid_area(a, b, c):
    p = 1.6075
    return 4 * math.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p)


def _head(rng, prm: SubjectParams):
    rd = prm.head_radius
    rw = rd * prm.head_width_ratio
    rz = rd * 1.12
    zc = prm.z_head + prm.crown_clip - rz
    n = int(round(_ellipsoid_area(rd, rw, rz) * prm.head_density))
    pts, nrm = _sample_ellipsoid(rng, (0.0, 0.0, zc), (rd, rw, rz), n)
    keep = pts[:, 2] >= prm.z_head - prm.chin_depth
    pts, nrm = pts[keep], nrm[keep]
    crown = pts[:, 2] > prm.z_head
    pts[crown, 2] = prm.z_head
    nrm[crown] = (0.0, 0.0, 1.0)

    # nose: cone from the face surface along +x
    zn = zc - 0.25 * rz
    base_x = rd * math.sqrt(max(0.0, 1.0 - ((zn - zc) / rz) ** 2)) - 3.0
    rb, length = 14.0, prm.nose_length
    slant = math.hypot(rb, length)
    m = max(int(round(math.pi * rb * slant * prm.nose_density)), 0)
    s = 1.0 - np.sqrt(rng.random(m))
    phi = rng.random(m) * 2 * math.pi
    r = (1.0 - s) * rb
    nose = np.column_stack([base_x + s * length, r * np.cos(phi), zn + r * np.sin(phi)])
    nose_n = np.column_stack([np.full(m, rb / slant),
                              np.cos(phi) * length / slant, np.sin(phi) * length / slant])

    pts = np.vstack([pts, nose])
    nrm = np.vstack([nrm, nose_n])
    rot = rotation_z(prm.head_yaw_offset)
    pts = pts @ rot.T
    nrm = nrm @ rot.T
    pts[:, 0] += prm.head_forward
    return pts, nrm


def _cylinder(rng, center_xy, radii_xy, z_lo, z_hi, density):
    a, b = radii_xy
    perim = math.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))
    n = int(round(perim * max(z_hi - z_lo, 0.0) * density))
    t = rng.random(n) * 2 * math.pi
    z = z_lo + rng.random(n) * (z_hi - z_lo)
    pts = np.column_stack([center_xy[0] + a * np.cos(t), center_xy[1] + b * np.sin(t), z])
    nrm = np.column_stack([np.cos(t) / a, np.sin(t) / b, np.zeros(n)])
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    return pts, nrm


def _tube(rng, p0, p1, radius, density):
    """Open cylinder of ``radius`` around the segment ``p0 -> p1``."""
    p0, p1 = np.asarray(p0, dtype=float), np.asarray(p1, dtype=float)
    axis = p1 - p0
    length = float(np.linalg.norm(axis))
    axis /= length
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    n = int(round(2 * math.pi * radius * length * density))
    s = rng.random(n)[:, None]
    phi = rng.random(n) * 2 * math.pi
    nrm = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    return p0 + s * (p1 - p0) + radius * nrm, nrm


def _torso(rng, prm: SubjectParams):
    a, b = prm.chest_half_depth, prm.shoulder_half_width
    z_top = prm.z_head - prm.shoulder_drop
    dome = 40.0
    n = int(round(math.pi * a * b * prm.density * 1.05))
    rad = np.sqrt(rng.random(n))
    t = rng.random(n) * 2 * math.pi
    x, y = a * rad * np.cos(t), b * rad * np.sin(t)
    z = z_top - dome * rad ** 2
    cap = np.column_stack([x, y, z])
    # normal of z = z_top - dome * ((x/a)^2 + (y/b)^2)
    cap_n = np.column_stack([2 * dome * x / a ** 2, 2 * dome * y / b ** 2, np.ones(n)])
    cap_n /= np.linalg.norm(cap_n, axis=1, keepdims=True)
    side, side_n = _cylinder(rng, (0.0, 0.0), (a, b), z_top - 420.0, z_top - dome, prm.density)
    n_lo, n_hi = prm.z_head - prm.shoulder_drop - 10.0, prm.z_head - prm.neck_gap
    neck, neck_n = _cylinder(rng, (0.7 * prm.head_forward, 0.0), (52.0, 58.0), n_lo, n_hi,
                             prm.density)
    return np.vstack([cap, side, neck]), np.vstack([cap_n, side_n, neck_n])


def _arms(rng, prm: SubjectParams):
    b = prm.shoulder_half_width
    z_top = prm.z_head - prm.shoulder_drop - 30.0
    parts = []
    for side in (1.0, -1.0):
        parts.append(_cylinder(rng, (0.0, side * (b + 35.0)), (42.0, 42.0),
                               z_top - 320.0, z_top, prm.density))
    front = prm.chest_half_depth + 25.0
    if prm.arm_pose == "hand_to_face":
        hand_c = np.array([prm.head_forward + 0.6 * prm.head_radius, -25.0,
                           prm.z_head - prm.chin_depth - 45.0])
        parts.append(_sample_ellipsoid(rng, hand_c, (45.0, 40.0, 30.0),
                                       int(_ellipsoid_area(45, 40, 30) * prm.density)))
        parts.append(_tube(rng, (front, -60.0, z_top - 250.0), hand_c, 35.0, prm.density))
    elif prm.arm_pose == "crossed":
        zc = z_top - 110.0
        parts.append(_tube(rng, (front, b, zc), (front, -b, zc), 40.0, prm.density))
    return np.vstack([p for p, _ in parts]), np.vstack([n for _, n in parts])


def _visible(points, normals, sensors) -> np.ndarray:
    vis = np.zeros(len(points), dtype=bool)
    for s in sensors:
        vis |= np.einsum("ij,ij->i", normals, np.asarray(s) - points) > 0
    return vis


def _outliers(rng, clean, center_xy, z_lo, z_hi, n, min_dist=200.0, radius=500.0):
    if n == 0:
        return np.empty((0, 3))
    tree = cKDTree(clean)
    found = []
    while sum(len(f) for f in found) < n:
        m = 4 * n
        r = radius * np.sqrt(rng.random(m))
        t = rng.random(m) * 2 * math.pi
        cand = np.column_stack([center_xy[0] + r * np.cos(t), center_xy[1] + r * np.sin(t),
                                z_lo + rng.random(m) * (z_hi - z_lo)])
        d, _ = tree.query(cand)
        found.append(cand[d >= min_dist])
    return np.vstack(found)[:n]


def subject_points(prm: SubjectParams, rng=None, sensors=SENSOR_POSITIONS):
    """Room-frame points of one subject and its ground truth."""
    rng = np.random.default_rng(prm.seed) if rng is None else rng
    parts = [_head(rng, prm), _torso(rng, prm), _arms(rng, prm)]
    pts = np.vstack([p for p, _ in parts])
    nrm = np.vstack([n for _, n in parts])
    rot = rotation_z(prm.body_yaw)
    offset = np.array([prm.position[0], prm.position[1], 0.0])
    pts = pts @ rot.T + offset
    nrm = nrm @ rot.T
    if prm.culling:
        keep = _visible(pts, nrm, sensors)
        pts = pts[keep]
    if prm.noise_sigma > 0:
        pts = pts + rng.normal(0.0, prm.noise_sigma, pts.shape)
    n_out = int(round(prm.outlier_fraction * len(pts)))
    if n_out:
        out = _outliers(rng, pts, prm.position, 0.73 * prm.z_head, prm.z_head + 250.0, n_out)
        pts = np.vstack([pts, out])
    t = math.radians(prm.body_yaw)
    head_c = (prm.position[0] + prm.head_forward * math.cos(t),
              prm.position[1] + prm.head_forward * math.sin(t))
    truth = GroundTruth(normalize_angle(prm.body_yaw), prm.head_yaw, head_c, prm.z_head,
                        tuple(prm.position), normalize_angle(prm.head_yaw_offset))
    return pts, truth


def synth_detection(prm: SubjectParams, truth: GroundTruth) -> SubjectDetection:
    z = prm.z_head + prm.builtin_z_error
    half = 0.5 * prm.builtin_z_spread
    return SubjectDetection(prm.subject_id,
                            truth.head_center[0] + prm.builtin_xy_error[0],
                            truth.head_center[1] + prm.builtin_xy_error[1],
                            z + half, z - half)


def _table_points(rng, prm: SubjectParams) -> np.ndarray:
    # table edge in front of the subject, below the upper-body crop
    n = 120
    u = rng.random((n, 2))
    local = np.column_stack([prm.chest_half_depth + 120 + 300 * u[:, 0],
                             -400 + 800 * u[:, 1], np.full(n, 740.0)])
    return local @ rotation_z(prm.body_yaw).T + np.array([*prm.position, 0.0])


def generate_subject_frame(prm: SubjectParams, timestamp: float = 0.0,
                           with_table: bool = True):
    """One frame containing a single synthetic subject, plus its ground truth."""
    rng = np.random.default_rng(prm.seed)
    pts, truth = subject_points(prm, rng)
    if with_table:
        pts = np.vstack([pts, _table_points(rng, prm)])
    frame = PointCloudFrame(timestamp, pts, (synth_detection(prm, truth),))
    return frame, truth


def default_sensors() -> list[Extrinsics]:
    return [Extrinsics.identity("tof1"), Extrinsics.identity("tof2")]


# --------------------------------------------------------------------- benchmark

@dataclass
class Benchmark:
    sessions: dict[str, SessionRecording]
    labels: list[dict]
    subjects: dict[str, dict]

    @property
    def n_frames(self) -> int:
        return len(self.labels)

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        (out / "sessions").mkdir(parents=True, exist_ok=True)
        for sid, sess in self.sessions.items():
            write_session(sess, out / "sessions" / f"{sid}.jsonl")
        write_labels(self.labels, out / "labels.csv")
        (out / "subjects.json").write_text(json.dumps(self.subjects, indent=2, sort_keys=True)
                                           + "\n", encoding="utf-8")
        return out


LABEL_FIELDS = ("session", "frame", "t", "subject", "head_yaw", "body_yaw", "head_yaw_abs")


def write_labels(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=LABEL_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in LABEL_FIELDS})
    return path


def read_labels(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["frame"] = int(r["frame"])
        for k in ("t", "head_yaw", "body_yaw", "head_yaw_abs"):
            r[k] = float(r[k])
    return rows


def random_anthropometry(rng) -> dict:
    return {
        "z_head": float(rng.uniform(1180, 1320)),
        "shoulder_half_width": float(rng.uniform(180, 225)),
        "chest_half_depth": float(rng.uniform(105, 135)),
        "head_radius": float(rng.uniform(88, 102)),
        "nose_length": float(rng.uniform(18, 30)),
        "head_forward": float(rng.uniform(55, 100)),
        "head_width_ratio": float(rng.uniform(0.76, 0.86)),
        "position": (float(rng.uniform(1100, 1900)), float(rng.uniform(1300, 2200))),
        "chair_yaw": float(rng.uniform(-180, 180)),
    }


def generate_benchmark(n_subjects: int = 12, frames_per_subject=(90, 125),
                       yaw_range=(-90.0, 90.0), seed: int = 0, noise_sigma: float = 8.0,
                       outlier_fraction: float = 0.02, body_jitter: float = 25.0,
                       builtin_z_sigma: float = 25.0, hand_to_face: float = 0.1) -> Benchmark:
    """Labelled multi-subject benchmark with randomised anthropometry.

    The learning target ``head_yaw`` is the head yaw relative to the body's
    facing direction, uniform over ``yaw_range``.
    """
    rng = np.random.default_rng(seed)
    if np.isscalar(frames_per_subject):
        frames_per_subject = (int(frames_per_subject), int(frames_per_subject))
    sessions, labels, subjects = {}, [], {}
    for s in range(n_subjects):
        sid = f"S{s + 1:02d}"
        anth = random_anthropometry(rng)
        chair = anth.pop("chair_yaw")
        subjects[sid] = {**anth, "chair_yaw": chair}
        n = int(rng.integers(frames_per_subject[0], frames_per_subject[1] + 1))
        frames = []
        for k in range(n):
            off = float(rng.uniform(*yaw_range)) if yaw_range[1] > yaw_range[0] \
                else float(yaw_range[0])
            body = normalize_angle(chair + rng.uniform(-body_jitter, body_jitter))
            pose = "hand_to_face" if rng.random() < hand_to_face else "down"
            prm = SubjectParams(**anth, body_yaw=body, head_yaw_offset=off, arm_pose=pose,
                                noise_sigma=noise_sigma, outlier_fraction=outlier_fraction,
                                seed=int(rng.integers(2 ** 31)), subject_id=sid,
                                builtin_z_error=float(rng.normal(0, builtin_z_sigma)))
            t = round(k / FPS, 6)
            frame, truth = generate_subject_frame(prm, t)
            frames.append(frame)
            labels.append({"session": sid, "frame": k, "t": t, "subject": sid,
                           "head_yaw": normalize_angle(off), "body_yaw": truth.body_yaw,
                           "head_yaw_abs": truth.head_yaw})
        sessions[sid] = SessionRecording(frames, default_sensors(),
                                         {"generator": "benchmark", "subject": sid})
    return Benchmark(sessions, labels, subjects)


def generate_sweep(step: float = 10.0, seed: int = 0, **params):
    """One subject rotated through a full turn; returns session and truths."""
    frames, truths = [], []
    for k, yaw in enumerate(np.arange(0.0, 360.0, step)):
        prm = SubjectParams(body_yaw=float(yaw), seed=seed + k, **params)
        frame, truth = generate_subject_frame(prm, round(k / FPS, 6))
        frames.append(frame)
        truths.append(truth)
    return SessionRecording(frames, default_sensors(), {"generator": "sweep"}), truths


# ------------------------------------------------------------------ conversation

SETUPS = {"Setup90": (75.0, 105.0), "Setup45": (35.0, 55.0)}


@dataclass
class Conversation:
    session: SessionRecording
    times: np.ndarray
    yaw: np.ndarray
    speakers: list[str]
    refs: tuple[float, float]
    subject_zero: float
    positions: dict[str, tuple[float, float]]
    expected: dict
    setup: str
    meta: dict = field(default_factory=dict)

    def write(self, out_dir, name: str = "conversation") -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_session(self.session, out / f"{name}.jsonl")
        with open(out / f"{name}_yaw.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "subject", "head_yaw"])
            for t, y in zip(self.times, self.yaw):
                w.writerow([repr(float(t)), "S1", repr(float(y))])
        with open(out / f"{name}_roles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for t, sp in zip(self.times, self.speakers):
                fh.write(json.dumps({"t": float(t), "speaker": sp}) + "\n")
        (out / f"{name}_expected.json").write_text(
            json.dumps(self.expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        meta = {
            "setup": self.setup,
            "subject": "S1",
            "subject_zero": self.subject_zero,
            "reference_angles": list(self.refs),
            "positions": {k: list(v) for k, v in self.positions.items()},
            "session": f"{name}.jsonl",
            "yaw": f"{name}_yaw.csv",
            "roles": f"{name}_roles.jsonl",
            "expected": f"{name}_expected.json",
            **self.meta,
        }
        path = out / f"{name}.json"
        path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _brute_labels(yaw, refs, half_width):
    out = []
    for y in yaw:
        lab = "NEUTRAL"
        for name, r in zip(("I1", "I2"), refs):
            if abs(normalize_angle(y - r)) <= half_width:
                lab = name
        out.append(lab)
    return out


def brute_force_contacts(labels, min_len=3):
    """Every maximal single-interviewer run of length >= ``min_len``."""
    events = []
    n = len(labels)
    for i in range(n):
        for j in range(i, n):
            lab = labels[i]
            if lab == "NEUTRAL" or any(labels[k] != lab for k in range(i, j + 1)):
                continue
            left_ok = i == 0 or labels[i - 1] != lab
            right_ok = j == n - 1 or labels[j + 1] != lab
            if left_ok and right_ok and j - i + 1 >= min_len:
                events.append({"target": lab, "start": i, "end": j})
    return events


def brute_force_exclusions(labels, window=20, quorum=15):
    """Every firing window, merged into episodes per excluded party."""
    fired = {"I1": [], "I2": []}
    for s in range(len(labels) - window + 1):
        w = labels[s:s + window]
        for party, other in (("I1", "I2"), ("I2", "I1")):
            if w.count(other) >= quorum and w.count(party) == 0:
                fired[party].append(s)
    episodes = []
    for party, starts in fired.items():
        cur = None
        for s in starts:
            # overlapping firing windows belong to the same episode
            if cur is not None and s <= cur["end"]:
                cur["end"] = s + window - 1
                continue
            if cur is not None:
                episodes.append(cur)
            cur = {"excluded": party, "start": s, "end": s + window - 1}
        if cur is not None:
            episodes.append(cur)
    return sorted(episodes, key=lambda e: (e["start"], e["excluded"]))


def generate_conversation(script, setup: str = "Setup90", seed: int = 0,
                          yaw_jitter: float = 2.0, half_width: float = 15.0,
                          clouds: bool = False, fps: float = FPS,
                          separation: float | None = None) -> Conversation:
    """Frame sequence following a script of ``(duration_s, target, speaker)``.

    ``target`` is ``"I1"``, ``"I2"``, ``"MID"`` or a subject-relative angle in
    degrees; ``speaker`` is ``"subject"``, ``"i1"``, ``"i2"`` or ``"none"``.
    The first frame after a change of target is a transition frame halfway
    between the two orientations. Expected events come from brute-force
    enumeration over the generated labels.
    """
    rng = np.random.default_rng(seed)
    lo, hi = SETUPS[setup]
    sep = float(rng.uniform(lo, hi)) if separation is None else float(separation)
    skew = float(rng.uniform(-10, 10))
    rel1, rel2 = sep / 2 + skew, -sep / 2 + skew

    subj_pos = (1500.0, 1200.0)
    subject_zero = 90.0
    dist = 1100.0
    positions = {"S1": subj_pos}
    for name, rel in (("I1", rel1), ("I2", rel2)):
        a = math.radians(subject_zero + rel)
        positions[name] = (subj_pos[0] + dist * math.cos(a), subj_pos[1] + dist * math.sin(a))
    refs = (normalize_angle(bearing(subj_pos, positions["I1"]) - subject_zero),
            normalize_angle(bearing(subj_pos, positions["I2"]) - subject_zero))
    target_angle = {"I1": refs[0], "I2": refs[1],
                    "MID": normalize_angle(math.degrees(math.atan2(
                        math.sin(math.radians(refs[0])) + math.sin(math.radians(refs[1])),
                        math.cos(math.radians(refs[0])) + math.cos(math.radians(refs[1])))))}

    yaw, speakers = [], []
    prev = None
    for duration, target, speaker in script:
        if duration <= 0:
            raise ValueError("script durations must be positive")
        goal = target_angle[target] if isinstance(target, str) else float(target)
        n = max(int(round(duration * fps)), 1)
        for k in range(n):
            if k == 0 and prev is not None and prev != goal:
                y = prev + 0.5 * normalize_angle(goal - prev)
            else:
                y = goal + rng.normal(0.0, yaw_jitter)
            yaw.append(normalize_angle(y))
            speakers.append(speaker)
        prev = goal
    times = np.round(np.arange(len(yaw)) / fps, 6)
    yaw = np.asarray(yaw, dtype=float)

    frames = []
    for k, t in enumerate(times):
        dets = []
        pts = []
        for name, pos in positions.items():
            sid = name
            if name == "S1" and clouds:
                prm = SubjectParams(body_yaw=subject_zero, head_yaw_offset=float(yaw[k]),
                                    position=pos, seed=seed * 100003 + k)
                p, truth = subject_points(prm)
                pts.append(p)
                dets.append(synth_detection(prm, truth))
                continue
            # a marker cloud standing in for the person
            ring = np.linspace(0, 2 * math.pi, 12, endpoint=False)
            pts.append(np.column_stack([pos[0] + 150 * np.cos(ring), pos[1] + 150 * np.sin(ring),
                                        np.full(12, 1250.0)]))
            dets.append(SubjectDetection(sid, pos[0], pos[1], 1260.0, 1240.0))
        frames.append(PointCloudFrame(float(t), np.vstack(pts), tuple(dets)))
    session = SessionRecording(frames, default_sensors(), {"generator": "conversation",
                                                           "setup": setup})

    labels = _brute_labels(yaw, refs, half_width)
    contacts = brute_force_contacts(labels)
    exclusions = brute_force_exclusions(labels)
    expected = {"labels": labels, "contacts": contacts, "exclusions": exclusions,
                "n_contacts": len(contacts), "n_exclusions": len(exclusions)}
    return Conversation(session, times, yaw, speakers, refs, subject_zero, positions,
                        expected, setup, {"separation": sep})


def params_dict(prm: SubjectParams) -> dict:
    return asdict(prm)


def with_params(prm: SubjectParams, **changes) -> SubjectParams:
    return replace(prm, **changes)


# ------------------------------------------------------------------ study

def random_script(rng, duration: float = 240.0, focus: float = 0.7, dwell=(3.0, 15.0)):
    """Alternating speaker turns with gaze segments.

    ``focus`` is the chance that a gaze segment targets the current speaker
    (or, while the subject talks, the interviewer who spoke last); the rest
    split between neutral and the other interviewer.
    """
    script = []
    t = 0.0
    last = "i1"
    while t < duration:
        speaker = str(rng.choice(["i1", "i2", "subject"], p=[0.35, 0.35, 0.3]))
        if speaker != "subject":
            last = speaker
        turn = float(rng.uniform(8.0, 30.0))
        end = min(t + turn, duration)
        while t < end - 1e-9:
            seg = min(float(rng.uniform(*dwell)), end - t)
            r = rng.random()
            ref = last.upper()
            other = "I2" if ref == "I1" else "I1"
            if r < focus:
                target = ref
            elif r < focus + (1 - focus) / 2:
                target = float(rng.uniform(-150, 150))
            else:
                target = other
            script.append((seg, target, speaker))
            t += seg
    return script


def generate_study(n_per_group: int = 6, groups=("A", "B"), focus=(0.75, 0.45),
                   setup: str = "Setup90", seed: int = 0, duration: float = 240.0):
    """Scripted conversations for two groups that differ in gaze focus.

    Returns ``{group: [Conversation, ...]}``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for g, f in zip(groups, focus):
        convs = []
        for _ in range(n_per_group):
            s = int(rng.integers(2 ** 31))
            script = random_script(np.random.default_rng(s), duration, f)
            convs.append(generate_conversation(script, setup, seed=s))
        out[g] = convs
    return out


def write_study(study, out_dir) -> Path:
    """Write each conversation plus ``manifest.json`` listing them by group."""
    out = Path(out_dir)
    manifest = {"groups": {}}
    for g, convs in study.items():
        names = []
        for k, conv in enumerate(convs):
            name = f"{g}{k + 1:02d}"
            conv.write(out, name)
            names.append(f"{name}.json")
        manifest["groups"][g] = names
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
