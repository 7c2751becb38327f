import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import axis_error, sample_ellipse
from orientcloud.core import GeometryError, angle_diff
from orientcloud.geometry import (body_orientation, conic_to_parametric, fit_ellipse_direct,
                                  parametric_to_conic, partition_quadrants, pca,
                                  quadrant_labels)


class TestEllipse:
    @pytest.mark.parametrize("theta", [0, 30, 60, 90, 120, 150])
    def test_exact_recovery(self, theta):
        fit = fit_ellipse_direct(sample_ellipse(200, 120, theta, (1500, -300)))
        assert axis_error(fit.orientation, theta) < 1e-6
        assert fit.semi_major == pytest.approx(200, rel=1e-9)
        assert fit.semi_minor == pytest.approx(120, rel=1e-9)
        assert fit.center == pytest.approx((1500, -300), abs=1e-6)

    def test_constraint_normalised(self):
        a, b, c, *_ = fit_ellipse_direct(sample_ellipse(50, 20, 10)).coefficients
        assert 4 * a * c - b * b == pytest.approx(1.0)

    def test_points_satisfy_conic(self):
        pts = sample_ellipse(80, 30, 45, (5, 5))
        fit = fit_ellipse_direct(pts)
        assert np.max(np.abs(fit.algebraic(pts[:, 0], pts[:, 1]))) < 1e-9

    @settings(max_examples=50, deadline=None)
    @given(a=st.floats(20, 500), ratio=st.floats(0.2, 0.95), theta=st.floats(-90, 89.9),
           cx=st.floats(-3000, 3000), cy=st.floats(-3000, 3000))
    def test_conic_roundtrip(self, a, ratio, theta, cx, cy):
        coef = parametric_to_conic((cx, cy), a, a * ratio, theta)
        center, r1, r2, ang = conic_to_parametric(coef)
        assert r1 == pytest.approx(a, rel=1e-7)
        assert r2 == pytest.approx(a * ratio, rel=1e-7)
        assert axis_error(ang, theta) < 1e-5
        np.testing.assert_allclose(center, (cx, cy), atol=1e-6 * max(1.0, abs(cx), abs(cy)))

    def test_sign_flipped_conic(self):
        coef = -parametric_to_conic((0, 0), 10, 5, 0)
        _, r1, r2, ang = conic_to_parametric(coef)
        assert (r1, r2) == pytest.approx((10, 5)) and ang == pytest.approx(0)

    def test_noisy_within_tolerance(self):
        rng = np.random.default_rng(3)
        for theta in range(0, 180, 30):
            fit = fit_ellipse_direct(sample_ellipse(200, 120, theta, noise=5.0, rng=rng))
            assert axis_error(fit.orientation, theta) <= 2.0

    def test_too_few_points(self):
        with pytest.raises(GeometryError):
            fit_ellipse_direct(np.zeros((5, 2)))

    def test_collinear(self):
        x = np.linspace(0, 100, 30)
        with pytest.raises(GeometryError):
            fit_ellipse_direct(np.column_stack([x, 2 * x + 1]))

    def test_hyperbola_rejected(self):
        with pytest.raises(GeometryError):
            conic_to_parametric((1, 0, -1, 0, 0, -1))


class TestPca:
    def test_matches_svd(self, rng):
        pts = rng.normal(size=(200, 3)) @ np.diag([30, 10, 2]) + 50
        res = pca(pts, 3)
        centred = pts - pts.mean(axis=0)
        _, s, vt = np.linalg.svd(centred, full_matrices=False)
        np.testing.assert_allclose(res.eigenvalues, s ** 2 / (len(pts) - 1), rtol=1e-10)
        for j in range(3):
            assert abs(abs(res.eigenvectors[:, j] @ vt[j]) - 1) < 1e-10

    def test_sign_convention(self, rng):
        res = pca(rng.normal(size=(50, 2)), 2)
        for j in range(2):
            col = res.eigenvectors[:, j]
            assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0

    def test_too_few(self):
        with pytest.raises(GeometryError):
            pca(np.zeros((3, 3)), 3)


def _torso_and_head(yaw, rng, forward=80.0, n=400):
    t = rng.uniform(0, 2 * math.pi, n)
    local = np.column_stack([120 * np.cos(t), 200 * np.sin(t), rng.uniform(800, 950, n)])
    h = rng.uniform(0, 2 * math.pi, 150)
    head = np.column_stack([forward + 90 * np.cos(h), 75 * np.sin(h), rng.uniform(1100, 1250, 150)])
    c, s = math.cos(math.radians(yaw)), math.sin(math.radians(yaw))
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return local @ rot.T, head @ rot.T


class TestBodyOrientation:
    @pytest.mark.parametrize("yaw", [-170, -90, -45, 0, 30, 90, 135, 179])
    def test_facing_recovered(self, yaw, rng):
        body, head = _torso_and_head(yaw, rng)
        res = body_orientation(body, head)
        assert abs(angle_diff(res.yaw, yaw)) < 1.0
        assert res.front_mean > res.back_mean and not res.tie

    def test_tie_goes_to_positive_x(self):
        t = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        body = np.column_stack([120 * np.cos(t), 200 * np.sin(t), np.full(100, 900)])
        head = np.array([[50.0, 0, 1200], [-50.0, 0, 1200]])
        res = body_orientation(body, head)
        assert res.tie and abs(angle_diff(res.yaw, 0)) < 1e-6

    def test_needs_head(self, rng):
        body, _ = _torso_and_head(0, rng)
        with pytest.raises(GeometryError):
            body_orientation(body, np.empty((0, 3)))


class TestQuadrants:
    def test_labels_and_boundaries(self):
        pts = np.array([[1, 1, 0], [1, -1, 0], [-1, 1, 0], [-1, -1, 0],
                        [0, 0, 0], [0, -1, 0], [-1, 0, 0]], dtype=float)
        np.testing.assert_array_equal(quadrant_labels(pts, (0, 0), 0.0), [0, 1, 2, 3, 0, 1, 2])

    def test_rotated_frame(self):
        # facing +y: forward is +y, left is -x
        pts = np.array([[-1, 1, 0], [1, 1, 0], [-1, -1, 0], [1, -1, 0]], dtype=float)
        np.testing.assert_array_equal(quadrant_labels(pts, (0, 0), 90.0), [0, 1, 2, 3])

    def test_partition_covers_all(self, rng):
        body, head = _torso_and_head(40, rng)
        res = body_orientation(body, head)
        part = partition_quadrants(head, res.ellipse, res.yaw)
        assert sum(part.counts()) == len(head)
        assert part.counts()[0] + part.counts()[1] > part.counts()[2] + part.counts()[3]
