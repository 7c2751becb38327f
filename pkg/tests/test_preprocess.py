import logging

import numpy as np
import pytest

from oracles import brute_knn_mean
from orientcloud.config import Config
from orientcloud.core import PointCloudFrame, SubjectDetection
from orientcloud.pipeline import locate_head, process_subject
from orientcloud.preprocess import (HeadPosition, UnusableFrame, apex_height,
                                    correct_head_position, crop_roi, initial_split,
                                    knn_denoise, mean_knn_distance, refined_split,
                                    validate_frame)
from orientcloud.synth import SubjectParams, _outliers, generate_subject_frame, subject_points


class TestDenoise:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        pts = np.vstack([rng.normal(0, 20, (90, 3)), rng.uniform(-400, 400, (10, 3))])
        np.testing.assert_allclose(mean_knn_distance(pts, 10), brute_knn_mean(pts, 10),
                                   rtol=1e-12)
        keep = mean_knn_distance(pts, 10) <= 50
        ref = brute_knn_mean(pts, 10) <= 50
        np.testing.assert_array_equal(knn_denoise(pts, 10, 50), pts[ref])
        np.testing.assert_array_equal(keep, ref)

    def test_duplicates_count_as_neighbours(self):
        pts = np.vstack([np.zeros((11, 3)), [[1000, 0, 0]]])
        assert len(knn_denoise(pts, 10, 1.0)) == 11

    def test_small_cloud_returned_with_warning(self, caplog):
        pts = np.zeros((5, 3))
        with caplog.at_level(logging.WARNING):
            out = knn_denoise(pts, 10, 50)
        assert out.shape == (5, 3) and "returning input" in caplog.text

    def test_planted_outliers(self):
        prm = SubjectParams(seed=4, noise_sigma=8.0)
        rng = np.random.default_rng(4)
        pts, _ = subject_points(prm, rng)
        pts = pts[pts[:, 2] >= 0.73 * prm.z_head]
        out = _outliers(rng, pts, prm.position, 900, 1500, 40)
        d = mean_knn_distance(np.vstack([pts, out]), 10) <= 50
        assert d[:len(pts)].all() and not d[len(pts):].any()


class TestSplits:
    def test_crop(self):
        pts = np.array([[0, 0, 1000], [600, 0, 1000], [0, 0, 100]] + [[1, 1, 1000]] * 100,
                       dtype=float)
        out = crop_roi(pts, (0, 0), 1250.0)
        assert len(out) == 101

    def test_crop_sparse(self):
        with pytest.raises(UnusableFrame) as exc:
            crop_roi(np.zeros((10, 3)) + [0, 0, 1000], (0, 0), 1250.0)
        assert exc.value.reason == "sparse_roi"

    def test_initial_split_threshold(self):
        pts = np.array([[0, 0, 1100], [0, 0, 1000], [0, 0, 1049.9]], dtype=float)
        s = initial_split(pts, 1180, 1220)
        assert s.threshold == 1050 and len(s.pc_head) == 1 and len(s.pc_body) == 2

    def test_initial_split_empty(self):
        with pytest.raises(UnusableFrame) as exc:
            initial_split(np.array([[0, 0, 500.0]]), 1200, 1200)
        assert exc.value.reason == "empty_head"

    def test_apex_rule(self):
        z = np.concatenate([[1300.0], np.full(6, 1250.0), np.linspace(1240, 1100, 50)])
        pts = np.column_stack([np.zeros_like(z), np.zeros_like(z), z])
        assert apex_height(pts) == (1250.0, False)

    def test_apex_fallback(self):
        z = np.arange(1000.0, 1300.0, 10.0)
        pts = np.column_stack([np.zeros_like(z), np.zeros_like(z), z])
        val, fb = apex_height(pts)
        assert fb and val == pytest.approx(np.median(z[::-1][:10]))

    def test_correction_fallback_flags(self):
        z = np.arange(1000.0, 1300.0, 10.0)
        x = np.linspace(0, 100, len(z))
        head = correct_head_position(np.column_stack([x, 2 * x, z]))
        assert set(head.flags) == {"center_fallback", "z_fallback"}

    def test_correction_sparse(self):
        with pytest.raises(UnusableFrame):
            correct_head_position(np.zeros((5, 3)))

    def test_refined_split_filters(self):
        head = HeadPosition((0.0, 0.0), 1250.0)
        body = [[0, 0, 900]] * 20 + [[600, 0, 900]]
        pts = np.array([[0, 0, 1200], [200, 0, 1200]] + body, dtype=float)
        s = refined_split(pts, head, Config())
        assert s.threshold == 1075
        assert len(s.pc_head) == 1
        assert len(s.pc_body) == 20  # the far body point is outside the body radius


class TestValidate:
    def _det(self, z=1250.0, xy=(0.0, 0.0)):
        return SubjectDetection("S1", xy[0], xy[1], z + 5, z - 5)

    def test_repeat(self):
        a = PointCloudFrame(0.0, np.ones((3, 3)))
        b = PointCloudFrame(1.0, np.ones((3, 3)))
        rep = validate_frame(b, a, self._det(), HeadPosition((0.0, 0.0), 1250.0))
        assert rep.repeated_frame and rep.rejected and rep.reason == "repeat"

    @pytest.mark.parametrize("dz,rejected", [(100.0, False), (100.5, True), (-100.5, True),
                                             (-99.0, False)])
    def test_z_threshold(self, dz, rejected):
        fr = PointCloudFrame(0.0, np.ones((3, 3)))
        rep = validate_frame(fr, None, self._det(1250.0), HeadPosition((0.0, 0.0), 1250.0 + dz))
        assert rep.rejected is rejected
        assert rep.head_discrepancy_z == pytest.approx(dz)

    def test_xy_threshold(self):
        fr = PointCloudFrame(0.0, np.ones((3, 3)))
        rep = validate_frame(fr, None, self._det(xy=(0, 101)), HeadPosition((0.0, 0.0), 1250.0))
        assert rep.reasons == ("xy discrepancy",)


class TestFaultInjection:
    @pytest.mark.parametrize("err", [-150, -110, -60, 0, 60, 110, 150])
    def test_correction_recovers_z(self, err):
        frame, truth = generate_subject_frame(SubjectParams(builtin_z_error=err, seed=7))
        res = process_subject(frame, "S1", features=False)
        assert abs(res.head.z_head - truth.z_head) <= 5.0
        assert res.validation.rejected is (abs(err) > 100)

    def test_reanchor_when_builtin_too_high(self):
        frame, truth = generate_subject_frame(SubjectParams(builtin_z_error=200, seed=1))
        det = frame.detection("S1")
        head, _, flags = locate_head(frame.points, det, Config())
        assert "reanchored" in flags
        assert abs(head.z_head - truth.z_head) <= 5.0

    def test_clean_frame_has_no_flags(self):
        for yaw in (0, 90, 200):
            frame, _ = generate_subject_frame(SubjectParams(body_yaw=yaw, seed=yaw))
            res = process_subject(frame, "S1")
            # nose flags belong to feature extraction, not preprocessing
            assert res.usable and [f for f in res.flags if not f.startswith("nose_")] == []

    def test_missing_detection(self):
        frame, _ = generate_subject_frame(SubjectParams())
        assert process_subject(frame, "nobody").status == "no_detection"
