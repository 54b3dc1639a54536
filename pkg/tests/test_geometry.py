"""Projection, homography, and planar pose recovery."""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from fovcal import (
    BoardSpec,
    CorrespondenceSet,
    DomainError,
    Intrinsics,
    NotImageableError,
    Pose,
    PoseEstimationError,
    RadialModel,
    estimate_planar_pose,
    homography_dlt,
    load_correspondences,
    project,
    save_correspondences,
    unproject,
)
from fovcal.geometry import rotation_from_rvec, rvec_from_rotation


def make_pose(rvec, t) -> Pose:
    return Pose(rotation_from_rvec(np.asarray(rvec, float)), np.asarray(t, float))


class TestRotations:
    def test_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            rv = rng.normal(size=3)
            rv *= rng.uniform(0.0, 3.1) / max(np.linalg.norm(rv), 1e-12)
            R = rotation_from_rvec(rv)
            assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
            R2 = rotation_from_rvec(rvec_from_rotation(R))
            assert np.max(np.abs(R - R2)) < 1e-9

    def test_small_angle(self):
        R = rotation_from_rvec([1e-14, 0.0, 0.0])
        assert np.max(np.abs(R - np.eye(3))) < 1e-13

    def test_near_pi(self):
        rv = np.array([0.0, 0.0, math.pi - 1e-8])
        R2 = rotation_from_rvec(rvec_from_rotation(rotation_from_rvec(rv)))
        assert np.max(np.abs(rotation_from_rvec(rv) - R2)) < 1e-6


class TestBoard:
    def test_corner_layout_row_major(self):
        pts = BoardSpec(2, 3, 0.1).corner_points()
        expected = np.array([
            [0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.2, 0.0, 0.0],
            [0.0, 0.1, 0.0], [0.1, 0.1, 0.0], [0.2, 0.1, 0.0],
        ])
        assert pts == pytest.approx(expected)

    def test_validation(self):
        with pytest.raises(ValueError):
            BoardSpec(1, 9, 0.03)
        with pytest.raises(ValueError):
            BoardSpec(6, 9, 0.0)


class TestPose:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            Pose(np.eye(3) * 1.001, np.zeros(3))

    def test_rejects_reflection(self):
        R = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError, match="determinant"):
            Pose(R, np.zeros(3))

    def test_arrays_are_immutable(self):
        pose = make_pose([0.1, 0.0, 0.0], [0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            pose.rotation[0, 0] = 2.0


class TestProject:
    def test_distorted_pixel_frozen(self):
        # f=1000, omega=0.001, on-axis-x point at normalized x = 0.09:
        # r_u = 90, r_d = atan(0.09)/0.001.
        intr = Intrinsics(1000.0, 640.0, 360.0, 0.001, RadialModel.EQUIDISTANCE, 1280, 720)
        uv = project(intr, make_pose([0, 0, 0], [0, 0, 1.0]), np.array([0.09, 0.0, 0.0]))
        assert uv[0] == pytest.approx(640.0 + 89.75817418995052, abs=1e-9)
        assert uv[1] == pytest.approx(360.0, abs=1e-12)

    def test_pinhole_when_omega_zero(self):
        intr = Intrinsics(900.0, 640.0, 360.0, 0.0, RadialModel.EQUIDISTANCE, 1280, 720)
        uv = project(intr, make_pose([0, 0, 0], [0, 0, 2.0]), np.array([0.1, -0.2, 0.0]))
        assert uv == pytest.approx([640.0 + 900.0 * 0.05, 360.0 - 900.0 * 0.1], abs=1e-9)

    def test_principal_axis_maps_to_center(self, gt_intrinsics):
        uv = project(gt_intrinsics, make_pose([0, 0, 0], [0, 0, 1.5]),
                     np.array([0.0, 0.0, 0.0]))
        assert uv == pytest.approx([640.0, 360.0], abs=1e-12)

    def test_behind_camera(self, gt_intrinsics):
        with pytest.raises(NotImageableError):
            project(gt_intrinsics, make_pose([0, 0, 0], [0, 0, -1.0]),
                    np.array([0.0, 0.0, 0.0]))

    def test_batch_shape(self, gt_intrinsics, board):
        pose = make_pose([0.1, -0.1, 0.02], [-0.1, -0.07, 0.4])
        uv = project(gt_intrinsics, pose, board.corner_points())
        assert uv.shape == (board.n_corners, 2)


class TestUnproject:
    def test_round_trip_rays(self, gt_intrinsics, board):
        pose = make_pose([0.2, -0.1, 0.05], [-0.1, -0.05, 0.4])
        pts = board.corner_points()
        uv = project(gt_intrinsics, pose, pts)
        rays = unproject(gt_intrinsics, uv)
        Xc = pts @ pose.rotation.T + pose.translation
        Xc /= np.linalg.norm(Xc, axis=1, keepdims=True)
        assert np.max(np.abs(rays - Xc)) < 1e-9

    def test_center_is_principal_axis(self, gt_intrinsics):
        assert unproject(gt_intrinsics, np.array([640.0, 360.0])) == pytest.approx(
            [0.0, 0.0, 1.0], abs=1e-12
        )

    def test_out_of_domain_pixel(self):
        # omega * r_d exceeds pi/2 for a pixel well outside the frame.
        intr = Intrinsics(900.0, 640.0, 360.0, 0.00213, RadialModel.EQUIDISTANCE, 1280, 720)
        with pytest.raises(DomainError):
            unproject(intr, np.array([-80.0, -80.0]))


class TestHomography:
    def test_recovers_known_homography(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            H_true = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
            H_true /= H_true[2, 2]
            src = rng.uniform(-1.0, 1.0, size=(12, 2))
            src_h = np.column_stack((src, np.ones(len(src))))
            dst_h = src_h @ H_true.T
            dst = dst_h[:, :2] / dst_h[:, 2:3]
            H = homography_dlt(src, dst)
            assert np.max(np.abs(H - H_true)) < 1e-8

    def test_too_few_points(self):
        pts = np.random.default_rng(0).uniform(size=(3, 2))
        with pytest.raises(PoseEstimationError):
            homography_dlt(pts, pts)

    def test_collinear_points_degenerate(self):
        src = np.column_stack((np.linspace(0, 1, 8), np.linspace(0, 2, 8)))
        with pytest.raises(PoseEstimationError):
            homography_dlt(src, src)


class TestPlanarPose:
    def test_noiseless_recovery(self, gt_intrinsics, board):
        rng = np.random.default_rng(31)
        for _ in range(10):
            rv = rng.normal(size=3)
            rv *= rng.uniform(0.0, 0.6) / max(np.linalg.norm(rv), 1e-12)
            pose = make_pose(rv, [rng.uniform(-0.1, 0.0), rng.uniform(-0.1, 0.0),
                                  rng.uniform(0.3, 0.8)])
            uv = project(gt_intrinsics, pose, board.corner_points())
            if np.any(uv < 0) or np.any(uv[:, 0] > 1279) or np.any(uv[:, 1] > 719):
                continue
            est = estimate_planar_pose(gt_intrinsics, board, uv)
            assert np.max(np.abs(est.rotation - pose.rotation)) < 1e-7
            assert np.max(np.abs(est.translation - pose.translation)) < 1e-7
            reproj = project(gt_intrinsics, est, board.corner_points())
            rms = math.sqrt(np.mean(np.sum((reproj - uv) ** 2, axis=1)))
            assert rms < 1e-6

    def test_noisy_pose_rms_tracks_noise(self, gt_intrinsics, board):
        rng = np.random.default_rng(8)
        pose = make_pose([0.15, -0.2, 0.1], [-0.12, -0.08, 0.45])
        uv = project(gt_intrinsics, pose, board.corner_points())
        noisy = uv + rng.normal(0.0, 0.5, size=uv.shape)
        est = estimate_planar_pose(gt_intrinsics, board, noisy)
        reproj = project(gt_intrinsics, est, board.corner_points())
        rms = math.sqrt(np.mean(np.sum((reproj - noisy) ** 2, axis=1)))
        assert 0.2 < rms < 1.0  # close to the injected 0.5 px

    def test_wrong_point_count(self, gt_intrinsics, board):
        with pytest.raises(ValueError):
            estimate_planar_pose(gt_intrinsics, board, np.zeros((5, 2)))

    def test_degenerate_points(self, gt_intrinsics, board):
        pts = np.tile([640.0, 360.0], (board.n_corners, 1))
        with pytest.raises(PoseEstimationError):
            estimate_planar_pose(gt_intrinsics, board, pts)


class TestCorrespondenceSet:
    def make(self, board):
        rng = np.random.default_rng(1)
        pts = [rng.uniform(0, 700, size=(board.n_corners, 2)) for _ in range(3)]
        return CorrespondenceSet(board, 1280, 720, ("a", "b", "c"), tuple(pts))

    def test_validation(self, board):
        with pytest.raises(ValueError, match="shape"):
            CorrespondenceSet(board, 1280, 720, ("a",), (np.zeros((5, 2)),))
        bad = np.full((board.n_corners, 2), np.nan)
        with pytest.raises(ValueError, match="non-finite"):
            CorrespondenceSet(board, 1280, 720, ("a",), (bad,))
        with pytest.raises(ValueError):
            CorrespondenceSet(board, 1280, 720, (), ())

    def test_subset(self, board):
        data = self.make(board)
        sub = data.subset([2, 0])
        assert sub.names == ("c", "a")
        assert np.array_equal(sub.points[0], data.points[2])

    def test_json_round_trip(self, tmp_path, board):
        data = self.make(board)
        path = tmp_path / "corr.json"
        save_correspondences(path, data)
        loaded = load_correspondences(path)
        assert loaded.names == data.names
        assert loaded.board == data.board
        assert (loaded.width, loaded.height) == (1280, 720)
        for a, b in zip(loaded.points, data.points):
            assert np.array_equal(a, b)
        d = json.loads(path.read_text())
        assert d["format_version"] == 1
        assert len(d["images"][0]["points"]) == board.n_corners
