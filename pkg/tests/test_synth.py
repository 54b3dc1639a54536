"""Synthetic scenarios: FOV recovery, pose sampling, data generation."""
from __future__ import annotations

import json

import numpy as np
import pytest

from fovcal import (
    CameraSpec,
    DomainError,
    FileFormatError,
    Intrinsics,
    Pose,
    RadialModel,
    SynthScenario,
    derive_spec,
    generate_correspondences,
    load_scenario,
    project,
    random_poses,
    solve_omega,
)


class TestDeriveSpec:
    def test_pinhole_frozen(self):
        intr = Intrinsics(900.0, 640.0, 360.0, 0.0, RadialModel.EQUIDISTANCE, 1280, 720)
        spec = derive_spec(intr)
        # 2 atan((W/2)/f) and 2 atan((H/2)/f) in degrees.
        assert spec.fov_h_deg == pytest.approx(70.83411055293486, abs=1e-12)
        assert spec.fov_v_deg == pytest.approx(43.60281897270362, abs=1e-12)
        assert spec.width == 1280 and spec.height == 720

    def test_round_trips_zero_shot_estimate(self):
        spec = CameraSpec("cam", 1280, 720, 86.5, 47.8)
        zs = solve_omega(spec)
        assert not zs.clamped
        intr = Intrinsics(
            zs.f_star, 640.0, 360.0, zs.omega_star, RadialModel.EQUIDISTANCE, 1280, 720
        )
        back = derive_spec(intr, name="cam")
        assert back.fov_h_deg == pytest.approx(86.5, abs=1e-8)
        assert back.fov_v_deg == pytest.approx(47.8, abs=1e-8)

    def test_oversized_frame_exceeds_domain(self, gt_intrinsics):
        # omega = 0.0012 supports half-extents below (pi/2)/omega ~ 1309 px.
        with pytest.raises(DomainError):
            derive_spec(gt_intrinsics, width=3000)


class TestRandomPoses:
    def test_boards_stay_in_frame_at_plausible_depth(self, gt_intrinsics, board):
        rng = np.random.default_rng(11)
        poses = random_poses(gt_intrinsics, board, 8, rng)
        assert len(poses) == 8
        board_w = (board.cols - 1) * board.square_size
        center = np.array([board_w / 2.0, (board.rows - 1) * board.square_size / 2.0, 0.0])
        for pose in poses:
            uv = project(gt_intrinsics, pose, board.corner_points())
            assert np.all(uv[:, 0] >= 0.0) and np.all(uv[:, 0] <= 1279.0)
            assert np.all(uv[:, 1] >= 0.0) and np.all(uv[:, 1] <= 719.0)
            depth = (pose.rotation @ center + pose.translation)[2]
            assert 0.5 * board_w <= depth <= 2.0 * board_w

    def test_same_seed_same_poses(self, gt_intrinsics, board):
        a = random_poses(gt_intrinsics, board, 4, np.random.default_rng(3))
        b = random_poses(gt_intrinsics, board, 4, np.random.default_rng(3))
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.rotation, pb.rotation)
            assert np.array_equal(pa.translation, pb.translation)

    def test_attempt_budget_exhaustion(self, gt_intrinsics, board):
        with pytest.raises(RuntimeError, match="attempts"):
            random_poses(gt_intrinsics, board, 1, np.random.default_rng(0), max_attempts=0)


class TestGenerateCorrespondences:
    def test_noiseless_equals_projection(self, gt_intrinsics, board):
        poses = random_poses(gt_intrinsics, board, 3, np.random.default_rng(21))
        data = generate_correspondences(SynthScenario(gt_intrinsics, board, poses))
        assert data.names == ("img000", "img001", "img002")
        for pose, pts in zip(poses, data.points):
            assert np.array_equal(pts, project(gt_intrinsics, pose, board.corner_points()))

    def test_noise_is_seeded_and_sized(self, gt_intrinsics, board):
        poses = random_poses(gt_intrinsics, board, 12, np.random.default_rng(5))
        scen = SynthScenario(gt_intrinsics, board, poses, noise_sigma=0.5, seed=42)
        data = generate_correspondences(scen)
        again = generate_correspondences(scen)
        clean = generate_correspondences(SynthScenario(gt_intrinsics, board, poses))
        deltas = np.concatenate(
            [(n - c).ravel() for n, c in zip(data.points, clean.points)]
        )
        assert 0.45 < deltas.std() < 0.55
        for a, b in zip(data.points, again.points):
            assert np.array_equal(a, b)

    def test_out_of_frame_pose_named_by_index(self, gt_intrinsics, board):
        ok = random_poses(gt_intrinsics, board, 1, np.random.default_rng(2))[0]
        bad = Pose(np.eye(3), np.array([10.0, 0.0, 1.0]))
        scen = SynthScenario(gt_intrinsics, board, (ok, bad))
        with pytest.raises(ValueError, match="pose 1"):
            generate_correspondences(scen)

    def test_scenario_validation(self, gt_intrinsics, board):
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
        with pytest.raises(ValueError):
            SynthScenario(gt_intrinsics, board, (pose,), noise_sigma=-0.1)
        with pytest.raises(ValueError):
            SynthScenario(gt_intrinsics, board, ())


class TestLoadScenario:
    def scenario_dict(self, gt_intrinsics):
        return {
            "format_version": 1,
            "intrinsics": gt_intrinsics.to_json_dict(),
            "board": {"rows": 6, "cols": 9, "square_size": 0.03},
            "n_images": 4,
            "noise_sigma": 0.25,
            "seed": 17,
        }

    def test_load_is_deterministic(self, tmp_path, gt_intrinsics):
        path = tmp_path / "scen.json"
        path.write_text(json.dumps(self.scenario_dict(gt_intrinsics)))
        s1 = load_scenario(path)
        s2 = load_scenario(path)
        assert s1.noise_sigma == 0.25 and s1.seed == 17 and len(s1.poses) == 4
        for a, b in zip(s1.poses, s2.poses):
            assert np.array_equal(a.rotation, b.rotation)
        d1 = generate_correspondences(s1)
        d2 = generate_correspondences(s2)
        for a, b in zip(d1.points, d2.points):
            assert np.array_equal(a, b)

    def test_defaults(self, tmp_path, gt_intrinsics):
        d = self.scenario_dict(gt_intrinsics)
        del d["noise_sigma"], d["seed"]
        path = tmp_path / "scen.json"
        path.write_text(json.dumps(d))
        s = load_scenario(path)
        assert s.noise_sigma == 0.0 and s.seed == 0

    def test_rejects_malformed_files(self, tmp_path, gt_intrinsics):
        path = tmp_path / "scen.json"
        path.write_text("{not json")
        with pytest.raises(FileFormatError):
            load_scenario(path)
        d = self.scenario_dict(gt_intrinsics)
        del d["board"]
        path.write_text(json.dumps(d))
        with pytest.raises(FileFormatError, match="board"):
            load_scenario(path)
        d = self.scenario_dict(gt_intrinsics)
        d["n_images"] = 0
        path.write_text(json.dumps(d))
        with pytest.raises(FileFormatError, match="n_images"):
            load_scenario(path)
        with pytest.raises(FileFormatError):
            load_scenario(tmp_path / "missing.json")
