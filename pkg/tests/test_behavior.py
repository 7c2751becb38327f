import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import CONTACT_EXPECTED, CONTACT_FIXTURE, EXCLUSION_EXPECTED, exclusion_fixture
from oracles import enumerate_contacts, enumerate_exclusions, ttest_oracle
from orientcloud.behavior import (I1, I2, NEUTRAL, ReferenceAngles, RegionSequence,
                                  align_roles, classify_frames, cohens_d, compare_groups,
                                  detect_contacts, detect_exclusions, frame_durations,
                                  reference_angles, role_distribution)
from orientcloud.core import GeometryError

N = NEUTRAL
FPS = 1.5


def seq(labels):
    return RegionSequence.from_labels(labels, FPS)


def _polar(deg, r=1000.0, origin=(0.0, 0.0)):
    t = math.radians(deg)
    return origin[0] + r * math.cos(t), origin[1] + r * math.sin(t)


class TestReferenceAngles:
    def test_example(self):
        r = reference_angles((0, 0), _polar(120), _polar(40), subject_zero=90)
        assert (r.angle_to_interviewer1, r.angle_to_interviewer2, r.midpoint) == \
            pytest.approx((30, -50, -10))

    def test_symmetric(self):
        r = reference_angles((0, 0), _polar(45), _polar(-45), subject_zero=0)
        assert r.midpoint == pytest.approx(0, abs=1e-9)

    def test_wraparound_midpoint(self):
        r = reference_angles((0, 0), _polar(170), _polar(-170), subject_zero=0)
        assert r.midpoint == pytest.approx(-180)

    def test_coincident(self):
        with pytest.raises(GeometryError):
            reference_angles((0, 0), (50, 0), _polar(90), 0)


class TestClassify:
    refs = ReferenceAngles.from_angles(45, -45)

    def test_closed_interval(self):
        s = classify_frames([0, 1, 2, 3], [60.0, 60.0001, -30.0, 0.0], self.refs)
        assert list(s.labels) == [I1, N, I2, N]

    def test_overlap_rejected(self):
        with pytest.raises(ValueError, match="smaller half-width"):
            classify_frames([0], [0], ReferenceAngles.from_angles(10, -10), 15)

    def test_setup45_gap(self):
        s = classify_frames([0, 1], [17.5, 0.0], ReferenceAngles.from_angles(17.5, -17.5), 15)
        assert list(s.labels) == [I1, N]


class TestContacts:
    def test_simple(self):
        res = detect_contacts(seq([I1, I1, I1, N, N]))
        assert [(e.target, e.start, e.end) for e in res.events] == [(I1, 0, 2)]
        assert res.events[0].frames == 3 and res.events[0].duration == pytest.approx(2.0)
        assert res.total_percent == pytest.approx(60.0)
        assert res.average_noncontact == pytest.approx(2 / FPS)

    def test_short_runs(self):
        assert detect_contacts(seq([I1, I1, N, I1, I1])).events == []

    def test_fixture(self):
        res = detect_contacts(seq(CONTACT_FIXTURE))
        assert len(CONTACT_FIXTURE) == 90
        assert [(e.target, e.start, e.end) for e in res.events] == CONTACT_EXPECTED
        assert [e.frames for e in res.events] == [3, 5, 8, 3]
        assert res.maximum_duration == pytest.approx(8 / FPS)
        assert res.average_duration == pytest.approx(19 / 4 / FPS)
        assert res.per_minute == pytest.approx(4 / (90 / FPS / 60))
        assert res.total_percent == pytest.approx(100 * 19 / 90)
        gaps = [5, 4, 14, 21, 27]
        assert res.average_noncontact == pytest.approx(np.mean(gaps) / FPS)
        assert res.total_percent + res.noncontact_percent == pytest.approx(100.0)


class TestExclusions:
    def test_definition_examples(self):
        assert [(e.target, e.start, e.end) for e in detect_exclusions(seq([I1] * 20)).events] \
            == [(I2, 0, 19)]
        assert len(detect_exclusions(seq([I1] * 15 + [N] * 5)).events) == 1
        assert detect_exclusions(seq([I1] * 19 + [I2])).events == []
        assert detect_exclusions(seq([I1] * 10)).events == []

    def test_fixture(self):
        lab = exclusion_fixture()
        res = detect_exclusions(seq(lab))
        assert [(e.target, e.start, e.end) for e in res.events] == EXCLUSION_EXPECTED
        assert res.maximum_duration == pytest.approx(40 / FPS)
        assert res.per_minute == pytest.approx(2 / (300 / FPS / 60))
        assert res.total_percent == pytest.approx(100 * 70 / 300)

    def test_uneven_timestamps(self):
        times = [0.0, 1.0, 3.0, 4.0]
        assert list(frame_durations(times)) == [1.0, 2.0, 1.0, 1.0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([I1, I2, N]), min_size=20, max_size=200),
       st.integers(1, 5))
def test_events_match_enumeration(labels, run):
    labels = [lab for lab in labels for _ in range(run)][:500]
    s = seq(labels)
    c = detect_contacts(s)
    e = detect_exclusions(s)
    assert [(x.target, x.start, x.end) for x in c.events] == enumerate_contacts(labels)
    assert [(x.target, x.start, x.end) for x in e.events] == enumerate_exclusions(labels)
    for a, b in zip(c.events, c.events[1:]):
        assert a.end < b.start
    for party in (I1, I2):
        eps = [x for x in e.events if x.target == party]
        for a, b in zip(eps, eps[1:]):
            assert a.end < b.start


class TestRoles:
    labels = [I1, I1, N, I2, I1, N, I2, I2]
    speakers = ["none", "i1", "i1", "i1", "subject", "subject", "i2", "subject"]

    def test_hand_count(self):
        r = role_distribution(seq(self.labels), self.speakers)
        assert r.n_excluded == 1 and r.n_listening == 4 and r.n_speaking == 3
        assert list(r.listening.values()) == pytest.approx([50.0, 25.0, 25.0])
        assert list(r.speaking.values()) == pytest.approx([200 / 3, 100 / 3, 0.0])

    def test_all_at_speaker(self):
        r = role_distribution(seq([I2] * 5), ["i2"] * 5)
        assert list(r.listening.values()) == [100.0, 0.0, 0.0]

    def test_subject_before_any_interviewer_excluded(self):
        r = role_distribution(seq([I1, I1]), ["subject", "i1"])
        assert r.n_excluded == 1 and r.n_speaking == 0

    def test_rows_sum_to_100(self, rng):
        lab = list(rng.choice([I1, I2, N], 300))
        sp = list(rng.choice(["i1", "i2", "subject", "none"], 300))
        r = role_distribution(seq(lab), sp)
        assert sum(r.listening.values()) == pytest.approx(100, abs=0.01)
        assert sum(r.speaking.values()) == pytest.approx(100, abs=0.01)

    def test_align_roles_step_function(self):
        roles = [(0.0, "i1"), (2.0, "subject"), (2.5, "none")]
        assert align_roles([-1, 0, 1.9, 2.0, 2.4, 3.0], roles) == \
            ["none", "i1", "i1", "subject", "subject", "none"]


def _with_moments(mean, sd, n):
    z = np.arange(n, dtype=float)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + sd * z


class TestStatistics:
    def test_identical_groups(self):
        g = compare_groups([1, 2, 3, 4], [1, 2, 3, 4])
        assert (g.t_statistic, g.p_value, g.cohens_d) == (0.0, 1.0, 0.0)

    def test_cohens_d_analytic(self):
        a, b = _with_moments(10, 2, 12), _with_moments(8, 2, 8)
        assert abs(cohens_d(a, b) - 1.0) <= 1e-9
        assert abs(compare_groups(a, b).cohens_d - 1.0) <= 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), rng.integers(2, 15))
        b = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), rng.integers(2, 15))
        t, p, d, df = ttest_oracle(a, b)
        g = compare_groups(a, b)
        assert g.df == df
        assert g.t_statistic == pytest.approx(t, abs=1e-6, rel=1e-6)
        assert g.p_value == pytest.approx(p, abs=1e-6)
        assert g.cohens_d == pytest.approx(d, abs=1e-6)

    def test_antisymmetry(self, rng):
        a, b = rng.normal(0, 1, 8), rng.normal(1, 2, 6)
        g, h = compare_groups(a, b), compare_groups(b, a)
        assert g.t_statistic == pytest.approx(-h.t_statistic)
        assert g.cohens_d == pytest.approx(-h.cohens_d)
        assert g.p_value == pytest.approx(h.p_value)

    def test_one_sided(self, rng):
        a, b = rng.normal(1, 1, 10), rng.normal(0, 1, 10)
        two = compare_groups(a, b)
        gt = compare_groups(a, b, "greater")
        lt = compare_groups(a, b, "less")
        assert gt.p_value + lt.p_value == pytest.approx(1.0)
        assert min(gt.p_value, lt.p_value) == pytest.approx(two.p_value / 2)

    def test_zero_variance(self):
        with pytest.raises(ValueError, match="undefined"):
            compare_groups([1, 1, 1], [1, 1])

    def test_preconditions(self):
        with pytest.raises(ValueError):
            compare_groups([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            compare_groups([1.0, np.inf], [1.0, 2.0])
