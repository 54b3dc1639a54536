"""Shared fixtures: a ground-truth camera, a board, and synthetic datasets."""
from __future__ import annotations

import numpy as np
import pytest

from fovcal import (
    BoardSpec,
    Intrinsics,
    RadialModel,
    SynthScenario,
    generate_correspondences,
    random_poses,
)


@pytest.fixture(scope="session")
def gt_intrinsics() -> Intrinsics:
    """A wide fisheye similar to a real 86-degree webcam."""
    return Intrinsics(870.0, 640.0, 360.0, 0.0012, RadialModel.EQUIDISTANCE, 1280, 720)


@pytest.fixture(scope="session")
def board() -> BoardSpec:
    return BoardSpec(6, 9, 0.03)


@pytest.fixture(scope="session")
def clean_dataset(gt_intrinsics, board):
    """10 noiseless views of the board."""
    rng = np.random.default_rng(2024)
    poses = random_poses(gt_intrinsics, board, 10, rng)
    scenario = SynthScenario(gt_intrinsics, board, poses, noise_sigma=0.0, seed=5)
    return generate_correspondences(scenario)


@pytest.fixture(scope="session")
def noisy_dataset(gt_intrinsics, board):
    """12 views with 0.5 px Gaussian corner noise."""
    rng = np.random.default_rng(77)
    poses = random_poses(gt_intrinsics, board, 12, rng)
    scenario = SynthScenario(gt_intrinsics, board, poses, noise_sigma=0.5, seed=9)
    return generate_correspondences(scenario)
