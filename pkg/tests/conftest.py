import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from orientcloud.config import Config  # noqa: E402
from orientcloud.synth import SubjectParams, generate_subject_frame  # noqa: E402


@pytest.fixture
def clean_frame():
    frame, truth = generate_subject_frame(SubjectParams(body_yaw=30.0, head_yaw_offset=20.0))
    return frame, truth


@pytest.fixture
def fast_cfg():
    """Small training budget for unit tests of the learning plumbing."""
    return Config(pool_size=4, max_epochs=30, patience=10, rf_trees=8, ensemble_start=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def benchmark():
    """The default 12-subject synthetic benchmark (generated once per run)."""
    from orientcloud.synth import generate_benchmark
    return generate_benchmark()
