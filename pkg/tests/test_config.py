import json

import pytest

from orientcloud.config import DEFAULT, Config


def test_defaults():
    assert DEFAULT.knn_k == 10 and DEFAULT.knn_dist == 50.0
    assert DEFAULT.crop_radius == 500.0 and DEFAULT.upper_body_fraction == 0.73
    assert DEFAULT.initial_split_offset == 150.0 and DEFAULT.refined_split_offset == 175.0
    assert DEFAULT.head_radius == 150.0 and DEFAULT.body_radius == 250.0
    assert DEFAULT.region_half_width == 15.0 and DEFAULT.contact_frames == 3
    assert (DEFAULT.exclusion_window, DEFAULT.exclusion_quorum) == (20, 15)
    assert (DEFAULT.pool_size, DEFAULT.ensemble_start) == (20, 3)


def test_key_value_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nknn_k = 8  # inline\ndenoise = off\nseed=3\n")
    cfg = Config.load(p)
    assert (cfg.knn_k, cfg.denoise, cfg.seed) == (8, False, 3)


def test_json_roundtrip(tmp_path):
    cfg = DEFAULT.replace(knn_dist=40.0, two_sided=False)
    assert Config.load(cfg.snapshot(tmp_path / "c.json")) == cfg


@pytest.mark.parametrize("text", ['{"bogus": 1}', "knn_k = 2.5", "denoise = maybe", "knn_k"])
def test_rejects_bad_values(tmp_path, text):
    p = tmp_path / "c.cfg"
    p.write_text(text)
    with pytest.raises(ValueError):
        Config.load(p)


def test_snapshot_sorted(tmp_path):
    obj = json.loads(DEFAULT.snapshot(tmp_path / "s.json").read_text())
    assert list(obj) == sorted(obj)
