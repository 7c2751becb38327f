"""Contact / Exclusion events and group statistics from head-yaw timelines.

All yaw values here are subject-relative (positive to the subject's left).
Each frame is credited with the time until the next frame; the last frame
gets the median frame interval, so per-frame durations add up to the
session duration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .core import GeometryError, angle_diff, bearing, circular_mean, normalize_angle

I1, I2, NEUTRAL = "I1", "I2", "NEUTRAL"
PARTIES = (I1, I2)

CONTACT_ROWS = (
    "Average duration of contact",
    "Maximum duration of contact",
    "Average duration of NOT contacting anyone",
    "Number of contacts per minute",
    "Total duration of contact % during an interview",
)
EXCLUSION_ROWS = (
    "Maximum duration of exclusions",
    "Number of exclusions per minute",
    "Total duration of exclusions % during an interview",
)
LISTENING_ROWS = ("Interviewer who is speaking", "Neutral", "Other interviewer")
SPEAKING_ROWS = ("Interviewer who spoke last", "Neutral", "Other interviewer")


@dataclass(frozen=True)
class ReferenceAngles:
    angle_to_interviewer1: float
    angle_to_interviewer2: float
    midpoint: float

    @classmethod
    def from_angles(cls, a1: float, a2: float) -> "ReferenceAngles":
        a1, a2 = normalize_angle(a1), normalize_angle(a2)
        return cls(a1, a2, circular_mean([a1, a2]))

    def as_tuple(self) -> tuple[float, float]:
        return self.angle_to_interviewer1, self.angle_to_interviewer2


def reference_angles(subject_xy, interviewer1_xy, interviewer2_xy, subject_zero: float,
                     min_distance: float = 100.0) -> ReferenceAngles:
    """Subject-relative bearings to both interviewers and their circular mean."""
    pts = [np.asarray(p, dtype=float)[:2] for p in (subject_xy, interviewer1_xy, interviewer2_xy)]
    for i in range(3):
        for j in range(i + 1, 3):
            if np.hypot(*(pts[i] - pts[j])) <= min_distance:
                raise GeometryError("participants closer than the minimum distance")
    a1 = normalize_angle(bearing(pts[0], pts[1]) - subject_zero)
    a2 = normalize_angle(bearing(pts[0], pts[2]) - subject_zero)
    return ReferenceAngles.from_angles(a1, a2)


def frame_durations(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if len(t) == 0:
        return np.empty(0)
    if len(t) == 1:
        return np.zeros(1)
    d = np.diff(t)
    if np.any(d <= 0):
        raise ValueError("timestamps must be strictly increasing")
    return np.append(d, np.median(d))


@dataclass
class RegionSequence:
    times: np.ndarray
    labels: np.ndarray
    half_width: float
    refs: ReferenceAngles | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.labels = np.asarray(self.labels, dtype=object)
        if len(self.times) != len(self.labels):
            raise ValueError("one label per frame required")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def durations(self) -> np.ndarray:
        return frame_durations(self.times)

    @property
    def duration(self) -> float:
        return float(self.durations.sum())

    @classmethod
    def from_labels(cls, labels, fps: float = 1.5, half_width: float = 15.0):
        n = len(labels)
        return cls(np.arange(n) / fps, list(labels), half_width)


def classify_frames(times, yaw, refs: ReferenceAngles, half_width: float = 15.0) -> RegionSequence:
    """Label each frame with the interviewer region (closed interval) holding its yaw."""
    a1, a2 = refs.as_tuple()
    if abs(angle_diff(a1, a2)) <= 2 * half_width:
        raise ValueError(f"interviewer regions overlap at half-width {half_width} deg; "
                         "use a smaller half-width")
    yaw = np.asarray(yaw, dtype=float)
    in1 = np.abs(angle_diff(yaw, a1)) <= half_width
    in2 = np.abs(angle_diff(yaw, a2)) <= half_width
    labels = np.where(in1, I1, np.where(in2, I2, NEUTRAL)).astype(object)
    return RegionSequence(times, labels, half_width, refs)


def _runs(labels):
    """``(label, start, end)`` for maximal runs of equal labels (end inclusive)."""
    labels = list(labels)
    out = []
    start = 0
    for k in range(1, len(labels) + 1):
        if k == len(labels) or labels[k] != labels[start]:
            out.append((labels[start], start, k - 1))
            start = k
    return out


@dataclass(frozen=True)
class Event:
    target: str
    start: int
    end: int
    start_time: float
    end_time: float

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    @property
    def frames(self) -> int:
        return self.end - self.start + 1

    def to_json(self) -> dict:
        return {"target": self.target, "start": self.start, "end": self.end,
                "start_time": self.start_time, "end_time": self.end_time,
                "duration": self.duration}


def _event(seq: RegionSequence, target, start, end, dur) -> Event:
    t0 = float(seq.times[start])
    return Event(target, int(start), int(end), t0, t0 + float(dur[start:end + 1].sum()))


@dataclass
class ContactSummary:
    events: list[Event]
    average_duration: float
    maximum_duration: float
    per_minute: float
    total_percent: float
    average_noncontact: float
    noncontact_percent: float

    def rows(self) -> dict:
        return dict(zip(CONTACT_ROWS, (self.average_duration, self.maximum_duration,
                                       self.average_noncontact, self.per_minute,
                                       self.total_percent)))


def detect_contacts(seq: RegionSequence, min_frames: int = 3) -> ContactSummary:
    """Maximal runs of one interviewer label lasting at least ``min_frames``."""
    dur = seq.durations
    total = float(dur.sum())
    events = [_event(seq, lab, s, e, dur) for lab, s, e in _runs(seq.labels)
              if lab in PARTIES and e - s + 1 >= min_frames]
    covered = np.zeros(len(seq), dtype=bool)
    for ev in events:
        covered[ev.start:ev.end + 1] = True
    gaps = [float(dur[s:e + 1].sum()) for c, s, e in _runs(covered) if not c]
    contact_time = float(dur[covered].sum())
    minutes = total / 60.0
    lengths = [ev.duration for ev in events]
    return ContactSummary(
        events,
        float(np.mean(lengths)) if lengths else 0.0,
        float(np.max(lengths)) if lengths else 0.0,
        len(events) / minutes if minutes > 0 else 0.0,
        100.0 * contact_time / total if total > 0 else 0.0,
        float(np.mean(gaps)) if gaps else 0.0,
        100.0 * (total - contact_time) / total if total > 0 else 0.0,
    )


@dataclass
class ExclusionSummary:
    events: list[Event]
    maximum_duration: float
    per_minute: float
    total_percent: float

    def rows(self) -> dict:
        return dict(zip(EXCLUSION_ROWS, (self.maximum_duration, self.per_minute,
                                         self.total_percent)))


def firing_windows(labels, window: int = 20, quorum: int = 15) -> dict[str, np.ndarray]:
    """Start indices of windows in which each party is excluded."""
    labels = np.asarray(labels, dtype=object)
    out = {}
    if len(labels) < window:
        return {p: np.empty(0, dtype=int) for p in PARTIES}
    counts = {}
    for p in PARTIES:
        c = np.concatenate([[0], np.cumsum(labels == p)])
        counts[p] = c[window:] - c[:-window]
    for party, other in ((I1, I2), (I2, I1)):
        out[party] = np.flatnonzero((counts[other] >= quorum) & (counts[party] == 0))
    return out


def detect_exclusions(seq: RegionSequence, window: int = 20, quorum: int = 15) -> ExclusionSummary:
    """Slide a ``window``-frame window by one frame; a party is excluded when
    the other has at least ``quorum`` frames in it and the party has none.
    Overlapping firing windows for the same party merge into one episode."""
    dur = seq.durations
    total = float(dur.sum())
    events = []
    for party, starts in firing_windows(seq.labels, window, quorum).items():
        cur = None
        for s in starts.tolist():
            if cur is not None and s <= cur[1]:
                cur[1] = s + window - 1
                continue
            if cur is not None:
                events.append(_event(seq, party, cur[0], cur[1], dur))
            cur = [s, s + window - 1]
        if cur is not None:
            events.append(_event(seq, party, cur[0], cur[1], dur))
    events.sort(key=lambda e: (e.start, e.target))
    covered = np.zeros(len(seq), dtype=bool)
    for ev in events:
        covered[ev.start:ev.end + 1] = True
    minutes = total / 60.0
    return ExclusionSummary(
        events,
        max((e.duration for e in events), default=0.0),
        len(events) / minutes if minutes > 0 else 0.0,
        100.0 * float(dur[covered].sum()) / total if total > 0 else 0.0,
    )


# ------------------------------------------------------------------ roles

SPEAKERS = ("subject", "i1", "i2", "none")


def read_roles(path) -> list[tuple[float, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            sp = obj.get("speaker")
            if sp not in SPEAKERS:
                raise ValueError(f"{path}:{n}: unknown speaker {sp!r}")
            out.append((float(obj["t"]), sp))
    return sorted(out)


def align_roles(times, entries) -> list[str]:
    """Speaker at each frame time: the latest annotation at or before it."""
    entries = sorted(entries)
    ts = np.array([t for t, _ in entries], dtype=float)
    out = []
    for t in np.asarray(times, dtype=float):
        k = int(np.searchsorted(ts, t, side="right")) - 1
        out.append(entries[k][1] if k >= 0 else "none")
    return out


@dataclass
class RoleDistribution:
    listening: dict
    speaking: dict
    n_listening: int
    n_speaking: int
    n_excluded: int

    def to_json(self) -> dict:
        return {"listening": self.listening, "speaking": self.speaking,
                "n_listening": self.n_listening, "n_speaking": self.n_speaking,
                "n_excluded": self.n_excluded}


def _percentages(counts, n):
    return {k: (100.0 * v / n if n else 0.0) for k, v in counts.items()}


def role_distribution(seq: RegionSequence, speakers) -> RoleDistribution:
    """Share of listening / speaking frames oriented at each party.

    While an interviewer speaks, frames count toward that speaker, neutral or
    the other interviewer. While the subject speaks they count toward the
    interviewer who spoke last, neutral or the other one. Frames with no
    speaker, or subject speech before any interviewer has spoken, are
    excluded and counted.
    """
    if len(speakers) != len(seq):
        raise ValueError("role timeline must align with frames")
    party = {"i1": I1, "i2": I2}
    other = {I1: I2, I2: I1}
    listen = dict.fromkeys(LISTENING_ROWS, 0)
    speak = dict.fromkeys(SPEAKING_ROWS, 0)
    last = None
    excluded = 0
    for lab, sp in zip(seq.labels, speakers):
        if sp in party:
            ref = party[sp]
            last = ref
            rows, counts = LISTENING_ROWS, listen
        elif sp == "subject" and last is not None:
            ref = last
            rows, counts = SPEAKING_ROWS, speak
        else:
            excluded += 1
            continue
        if lab == ref:
            counts[rows[0]] += 1
        elif lab == NEUTRAL:
            counts[rows[1]] += 1
        else:
            assert lab == other[ref]
            counts[rows[2]] += 1
    n_l, n_s = sum(listen.values()), sum(speak.values())
    return RoleDistribution(_percentages(listen, n_l), _percentages(speak, n_s),
                            n_l, n_s, excluded)


# ------------------------------------------------------------------ statistics

@dataclass
class GroupStats:
    values1: list[float]
    values2: list[float]
    mean1: float
    mean2: float
    t_statistic: float
    p_value: float
    df: int
    cohens_d: float
    alternative: str = "two-sided"

    def to_json(self) -> dict:
        return {"n1": len(self.values1), "n2": len(self.values2), "mean1": self.mean1,
                "mean2": self.mean2, "t_statistic": self.t_statistic, "p_value": self.p_value,
                "df": self.df, "cohens_d": self.cohens_d, "alternative": self.alternative}


def pooled_sd(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    var = ((n1 - 1) * a.var(ddof=1) + (n2 - 1) * b.var(ddof=1)) / (n1 + n2 - 2)
    return math.sqrt(var)


def cohens_d(a, b) -> float:
    sd = pooled_sd(a, b)
    if sd == 0:
        raise ValueError("Cohen's d undefined for zero pooled variance")
    return (float(np.mean(a)) - float(np.mean(b))) / sd


def compare_groups(values1, values2, alternative: str = "two-sided") -> GroupStats:
    """Pooled-variance independent two-sample t-test and Cohen's d.

    ``alternative`` is ``"two-sided"``, ``"greater"`` (group 1 mean larger)
    or ``"less"``.
    """
    a = np.asarray(values1, dtype=float)
    b = np.asarray(values2, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each group needs at least two values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("group values must be finite")
    sd = pooled_sd(a, b)
    if sd == 0:
        raise ValueError("Cohen's d undefined for zero pooled variance")
    n1, n2 = len(a), len(b)
    df = n1 + n2 - 2
    diff = float(a.mean() - b.mean())
    t = diff / (sd * math.sqrt(1.0 / n1 + 1.0 / n2))
    if alternative == "two-sided":
        p = 2.0 * float(stats.t.sf(abs(t), df))
    elif alternative == "greater":
        p = float(stats.t.sf(t, df))
    elif alternative == "less":
        p = float(stats.t.cdf(t, df))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return GroupStats(a.tolist(), b.tolist(), float(a.mean()), float(b.mean()), t,
                      min(1.0, p), df, diff / sd, alternative)


# ------------------------------------------------------------------ session level

@dataclass
class SessionAnalysis:
    name: str
    sequence: RegionSequence
    contacts: ContactSummary
    exclusions: ExclusionSummary
    roles: RoleDistribution | None = None
    group: str | None = None
    setup: str | None = None
    extra: dict = field(default_factory=dict)

    def statistics(self) -> dict:
        return {**self.contacts.rows(), **self.exclusions.rows()}

    def to_json(self) -> dict:
        return {
            "name": self.name, "group": self.group, "setup": self.setup,
            "n_frames": len(self.sequence), "duration_s": self.sequence.duration,
            "statistics": self.statistics(),
            "contacts": [e.to_json() for e in self.contacts.events],
            "exclusions": [e.to_json() for e in self.exclusions.events],
            "roles": self.roles.to_json() if self.roles else None,
            **self.extra,
        }


def analyze_session(name, times, yaw, refs: ReferenceAngles, speakers=None, cfg=None,
                    group=None, setup=None) -> SessionAnalysis:
    from .config import DEFAULT
    cfg = cfg or DEFAULT
    seq = classify_frames(times, yaw, refs, cfg.region_half_width)
    contacts = detect_contacts(seq, cfg.contact_frames)
    exclusions = detect_exclusions(seq, cfg.exclusion_window, cfg.exclusion_quorum)
    roles = role_distribution(seq, speakers) if speakers is not None else None
    return SessionAnalysis(name, seq, contacts, exclusions, roles, group, setup)


def compare_sessions(analyses: list[SessionAnalysis], group1: str, group2: str,
                     alternative: str = "two-sided") -> dict[str, GroupStats]:
    """Group comparison for every session statistic and the role-table rows."""
    def values(group, getter):
        return [getter(a) for a in analyses if a.group == group]

    getters = {row: (lambda a, r=row: a.statistics()[r]) for row in CONTACT_ROWS + EXCLUSION_ROWS}
    if all(a.roles is not None for a in analyses):
        for row in LISTENING_ROWS:
            getters[f"Listening: {row}"] = lambda a, r=row: a.roles.listening[r]
        for row in SPEAKING_ROWS:
            getters[f"Speaking: {row}"] = lambda a, r=row: a.roles.speaking[r]
    out = {}
    for row, get in getters.items():
        a, b = values(group1, get), values(group2, get)
        try:
            out[row] = compare_groups(a, b, alternative)
        except ValueError:
            continue
    return out


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
