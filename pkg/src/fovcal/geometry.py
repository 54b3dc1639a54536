"""Projective geometry: boards, poses, projection, and planar pose recovery.

Pixel convention: integer coordinates address pixel centers and the principal
point of a centered camera is (width/2, height/2), so a W-pixel-wide image
spans [-0.5, W-0.5] in continuous coordinates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, FileFormatError, NotImageableError, PoseEstimationError
from .model import FORMAT_VERSION, Intrinsics, radial_forward, radial_inverse

_TINY_RADIUS = 1e-12


# ---------------------------------------------------------------------------
# Rotations


def rotation_from_rvec(rvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula: axis-angle vector to rotation matrix."""
    rvec = np.asarray(rvec, dtype=float).reshape(3)
    theta = float(np.linalg.norm(rvec))
    K = np.array(
        [
            [0.0, -rvec[2], rvec[1]],
            [rvec[2], 0.0, -rvec[0]],
            [-rvec[1], rvec[0], 0.0],
        ]
    )
    if theta < 1e-12:
        return np.eye(3) + K
    K /= theta
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def rvec_from_rotation(R: np.ndarray) -> np.ndarray:
    """Inverse Rodrigues: rotation matrix to axis-angle vector."""
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-9:
        return 0.5 * v
    if theta > np.pi - 1e-6:
        # Near pi the off-diagonal difference vanishes; recover the axis from
        # the symmetric part instead.
        A = 0.5 * (R + np.eye(3))
        axis = np.sqrt(np.clip(np.diag(A), 0.0, None))
        k = int(np.argmax(axis))
        if axis[k] > 0.0:
            axis[(k + 1) % 3] = A[k, (k + 1) % 3] / axis[k]
            axis[(k + 2) % 3] = A[k, (k + 2) % 3] / axis[k]
        axis /= max(np.linalg.norm(axis), 1e-300)
        if np.dot(axis, v) < 0.0:
            axis = -axis
        return theta * axis
    return (0.5 * theta / np.sin(theta)) * v


def _frozen_array(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class BoardSpec:
    """Planar checkerboard: inner-corner grid size and square edge length."""

    rows: int
    cols: int
    square_size: float

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise ValueError("board must have at least 2x2 corners")
        if not self.square_size > 0.0:
            raise ValueError(f"square_size must be > 0, got {self.square_size}")

    @property
    def n_corners(self) -> int:
        return self.rows * self.cols

    def corner_points(self) -> np.ndarray:
        """Board-frame corner coordinates, (rows*cols, 3), z = 0, row-major."""
        cc, rr = np.meshgrid(np.arange(self.cols), np.arange(self.rows))
        pts = np.zeros((self.n_corners, 3))
        pts[:, 0] = cc.ravel() * self.square_size
        pts[:, 1] = rr.ravel() * self.square_size
        return pts


@dataclass(frozen=True)
class Pose:
    """Rigid transform from a target frame into the camera frame: Xc = R X + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {R.shape}")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", _frozen_array(R))
        object.__setattr__(self, "translation", _frozen_array(t))

    @property
    def rvec(self) -> np.ndarray:
        return rvec_from_rotation(self.rotation)


@dataclass(frozen=True)
class CorrespondenceSet:
    """Detected board corners for N images of one board by one camera."""

    board: BoardSpec
    width: int
    height: int
    names: tuple[str, ...]
    points: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        if len(self.names) == 0:
            raise ValueError("at least one image is required")
        if len(self.names) != len(self.points):
            raise ValueError("names and points must have equal length")
        m = self.board.n_corners
        frozen = []
        for name, pts in zip(self.names, self.points):
            a = np.asarray(pts, dtype=float)
            if a.shape != (m, 2):
                raise ValueError(
                    f"image '{name}' has point array of shape {a.shape}, expected ({m}, 2)"
                )
            if not np.all(np.isfinite(a)):
                raise ValueError(f"image '{name}' contains non-finite points")
            frozen.append(_frozen_array(a))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "points", tuple(frozen))

    @property
    def n_images(self) -> int:
        return len(self.names)

    def subset(self, indices: Sequence[int]) -> "CorrespondenceSet":
        idx = list(indices)
        return CorrespondenceSet(
            self.board,
            self.width,
            self.height,
            tuple(self.names[i] for i in idx),
            tuple(self.points[i] for i in idx),
        )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "board": {
                "rows": self.board.rows,
                "cols": self.board.cols,
                "square_size": self.board.square_size,
            },
            "width": self.width,
            "height": self.height,
            "images": [
                {"name": name, "points": pts.tolist()}
                for name, pts in zip(self.names, self.points)
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "CorrespondenceSet":
        if not isinstance(d, dict):
            raise FileFormatError("correspondence set must be a JSON object")
        board_d = d.get("board")
        if not isinstance(board_d, dict):
            raise FileFormatError("missing or invalid 'board' object")
        for key in ("rows", "cols", "square_size"):
            if key not in board_d:
                raise FileFormatError(f"board is missing field '{key}'")
        images = d.get("images")
        if not isinstance(images, list):
            raise FileFormatError("missing or invalid 'images' list")
        names = []
        points = []
        for i, entry in enumerate(images):
            if not isinstance(entry, dict) or "name" not in entry or "points" not in entry:
                raise FileFormatError(f"images[{i}] must have 'name' and 'points'")
            names.append(str(entry["name"]))
            try:
                points.append(np.asarray(entry["points"], dtype=float))
            except (TypeError, ValueError) as e:
                raise FileFormatError(f"images[{i}] points are not numeric: {e}") from e
        if "width" not in d or "height" not in d:
            raise FileFormatError("missing 'width'/'height'")
        try:
            board = BoardSpec(
                int(board_d["rows"]), int(board_d["cols"]), float(board_d["square_size"])
            )
            return cls(board, int(d["width"]), int(d["height"]), tuple(names), tuple(points))
        except (TypeError, ValueError) as e:
            raise FileFormatError(f"correspondence set invalid: {e}") from e


def load_correspondences(path: str | Path) -> CorrespondenceSet:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    try:
        return CorrespondenceSet.from_json_dict(json.loads(text))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path} is not valid JSON: {e}") from e


def save_correspondences(path: str | Path, data: CorrespondenceSet) -> None:
    Path(path).write_text(json.dumps(data.to_json_dict()) + "\n")


# ---------------------------------------------------------------------------
# Projection


def project_params(f: float, omega: float, cx: float, cy: float, model,
                   rotation: np.ndarray, translation: np.ndarray,
                   points: np.ndarray) -> np.ndarray:
    """Validation-free projection core shared with the optimizers.

    ``points`` must be (N, 3); returns (N, 2).  Raises NotImageableError on
    non-positive depth.
    """
    Xc = points @ np.asarray(rotation).T + np.asarray(translation)
    z = Xc[:, 2]
    if np.any(z <= 0.0):
        raise NotImageableError("point not imageable: non-positive depth")
    x = Xc[:, 0] / z
    y = Xc[:, 1] / z
    r_u = f * np.hypot(x, y)
    r_d = radial_forward(model, omega, r_u)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r_u > _TINY_RADIUS, r_d / np.maximum(r_u, _TINY_RADIUS), 1.0)
    return np.column_stack((cx + f * x * s, cy + f * y * s))


def project(intr: Intrinsics, pose: Pose, points) -> np.ndarray:
    """Project world points through pose and intrinsics to pixel coordinates.

    Accepts a single (3,) point or an (N, 3) array; returns matching shape.

    Raises:
        NotImageableError: if any point has non-positive camera-frame depth.
    """
    P = np.asarray(points, dtype=float)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    if P.shape[1] != 3:
        raise ValueError(f"points must be (N, 3), got {P.shape}")
    uv = project_params(
        intr.f, intr.omega, intr.cx, intr.cy, intr.model,
        pose.rotation, pose.translation, P,
    )
    return uv[0] if single else uv


def unproject(intr: Intrinsics, pixels) -> np.ndarray:
    """Back-project pixels to unit rays in the camera frame (positive z).

    Accepts a single (2,) pixel or an (N, 2) array; returns matching shape.

    Raises:
        DomainError: if a pixel radius falls outside the invertible range.
    """
    p = np.asarray(pixels, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[1] != 2:
        raise ValueError(f"pixels must be (N, 2), got {p.shape}")
    dx = p[:, 0] - intr.cx
    dy = p[:, 1] - intr.cy
    r_d = np.hypot(dx, dy)
    r_u = radial_inverse(intr.model, intr.omega, r_d)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r_d > _TINY_RADIUS, r_u / np.maximum(r_d, _TINY_RADIUS), 1.0) / intr.f
    rays = np.column_stack((dx * s, dy * s, np.ones_like(dx)))
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    return rays[0] if single else rays


# ---------------------------------------------------------------------------
# Homography and planar pose


def homography_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Direct linear transform homography with Hartley normalization.

    Maps src (N, 2) onto dst (N, 2); returns a 3x3 matrix H with dst ~ H src.

    Raises:
        PoseEstimationError: fewer than 4 points or a degenerate configuration.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError("src and dst must both be (N, 2)")
    n = src.shape[0]
    if n < 4:
        raise PoseEstimationError(f"homography needs at least 4 points, got {n}")

    def normalizer(pts: np.ndarray) -> np.ndarray:
        centroid = pts.mean(axis=0)
        d = np.linalg.norm(pts - centroid, axis=1).mean()
        if d < 1e-12:
            raise PoseEstimationError("degenerate configuration: coincident points")
        s = np.sqrt(2.0) / d
        return np.array(
            [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
        )

    Ts = normalizer(src)
    Td = normalizer(dst)
    sh = np.column_stack((src, np.ones(n))) @ Ts.T
    dh = np.column_stack((dst, np.ones(n))) @ Td.T
    A = np.zeros((2 * n, 9))
    A[0::2, 0:3] = sh
    A[0::2, 6:9] = -dh[:, 0:1] * sh
    A[1::2, 3:6] = sh
    A[1::2, 6:9] = -dh[:, 1:2] * sh
    _, sv, vt = np.linalg.svd(A)
    if sv[0] <= 0.0 or sv[-2] / sv[0] < 1e-10:
        raise PoseEstimationError("degenerate configuration: homography is not unique")
    H = np.linalg.inv(Td) @ vt[-1].reshape(3, 3) @ Ts
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]
    return H


def _pose_from_homography(H: np.ndarray) -> Pose:
    """Extract a rigid pose from a board-plane-to-normalized-image homography."""
    h1, h2, h3 = H[:, 0], H[:, 1], H[:, 2]
    # Choose the sign putting the board in front of the camera.
    if h3[2] < 0.0:
        h1, h2, h3 = -h1, -h2, -h3
    lam = 2.0 / (np.linalg.norm(h1) + np.linalg.norm(h2))
    R_approx = np.column_stack((h1 * lam, h2 * lam, np.cross(h1, h2) * lam * lam))
    U, _, Vt = np.linalg.svd(R_approx)
    R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
    t = h3 * lam
    if t[2] <= 0.0:
        raise PoseEstimationError("decomposed pose places the board behind the camera")
    return Pose(R, t)


def _pose_residuals(intr: Intrinsics, params: np.ndarray, board_pts: np.ndarray,
                    observed: np.ndarray) -> np.ndarray:
    pose = Pose(rotation_from_rvec(params[:3]), params[3:])
    return (project(intr, pose, board_pts) - observed).ravel()


def refine_pose(intr: Intrinsics, pose: Pose, board_pts: np.ndarray,
                observed: np.ndarray, max_iters: int = 20) -> Pose:
    """Gauss-Newton polish of a pose against observed pixels.

    Parametrized as axis-angle plus translation; forward-difference Jacobian.
    Stops after ``max_iters`` or when the gradient infinity-norm drops below
    1e-12.
    """
    params = np.concatenate((pose.rvec, pose.translation))

    def try_residuals(p: np.ndarray) -> np.ndarray | None:
        try:
            return _pose_residuals(intr, p, board_pts, observed)
        except (NotImageableError, DomainError, ValueError):
            return None

    res = try_residuals(params)
    if res is None:
        raise PoseEstimationError("initial pose does not image the board")
    cost = float(res @ res)
    for _ in range(max_iters):
        J = np.empty((res.size, 6))
        for j in range(6):
            h = 1e-7 * max(1.0, abs(params[j]))
            pj = params.copy()
            pj[j] += h
            rj = try_residuals(pj)
            if rj is None:
                rj = res  # zero column: parameter pinned this iteration
            J[:, j] = (rj - res) / h
        g = J.T @ res
        if float(np.max(np.abs(g))) < 1e-12:
            break
        JtJ = J.T @ J
        try:
            step = np.linalg.solve(JtJ + 1e-12 * np.eye(6), -g)
        except np.linalg.LinAlgError:
            break
        improved = False
        for _ in range(10):
            trial = params + step
            r_trial = try_residuals(trial)
            if r_trial is not None:
                c_trial = float(r_trial @ r_trial)
                if c_trial < cost:
                    params, res, cost = trial, r_trial, c_trial
                    improved = True
                    break
            step *= 0.5
        if not improved:
            break
    return Pose(rotation_from_rvec(params[:3]), params[3:])


def estimate_planar_pose(intr: Intrinsics, board: BoardSpec, points: np.ndarray) -> Pose:
    """Recover a board pose from its detected corners (planar PnP).

    Undistorts the corners to normalized image coordinates, fits a DLT
    homography from the board plane, decomposes it into an orthonormal pose,
    and polishes with Gauss-Newton on pixel reprojection.

    Raises:
        PoseEstimationError: degenerate geometry at any stage.
        DomainError: corners outside the invertible radius range.
    """
    board_pts = board.corner_points()
    pts = np.asarray(points, dtype=float)
    if pts.shape != (board.n_corners, 2):
        raise ValueError(
            f"points must be ({board.n_corners}, 2) for this board, got {pts.shape}"
        )
    rays = unproject(intr, pts)
    norm_xy = rays[:, :2] / rays[:, 2:3]
    H = homography_dlt(board_pts[:, :2], norm_xy)
    pose0 = _pose_from_homography(H)
    return refine_pose(intr, pose0, board_pts, pts)
