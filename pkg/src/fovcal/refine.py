"""Reprojection-error evaluation and Levenberg-Marquardt refinement.

The calibration cost is the mean squared pixel reprojection error over all
N images and M board corners,

    eps^2 = (1/NM) sum_i sum_j || p_ij - proj(intr, pose_i, P_j) ||^2 ,

reported as the RMS eps in pixels.  ``full_calibrate`` jointly optimizes the
shared intrinsics and the N per-image poses; ``single_shot_sweep`` runs N
leave-all-but-one-in calibrations to measure how well a single image
generalizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import DomainError, NotImageableError, PoseEstimationError
from .geometry import (
    CorrespondenceSet,
    Pose,
    estimate_planar_pose,
    project,
    project_params,
    rotation_from_rvec,
)
from .model import Intrinsics, RadialModel

_LAMBDA_CEILING = 1e12


@dataclass(frozen=True)
class RefineConfig:
    """Levenberg-Marquardt settings for :func:`full_calibrate`."""

    max_iters: int = 100
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    cost_tol: float = 1e-12
    optimize_principal_point: bool = False

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.lambda0 > 0.0:
            raise ValueError("lambda0 must be > 0")
        if not self.lambda_up > 1.0:
            raise ValueError("lambda_up must be > 1")
        if not 0.0 < self.lambda_down < 1.0:
            raise ValueError("lambda_down must lie in (0, 1)")
        if not self.cost_tol > 0.0:
            raise ValueError("cost_tol must be > 0")


@dataclass(frozen=True)
class CalibrationReport:
    """Intrinsics with per-image poses and reprojection statistics.

    ``converged`` is False when LM stalled (damping exhausted) rather than
    meeting the cost tolerance; the report then still carries the best
    parameters found.
    """

    intrinsics: Intrinsics
    poses: tuple[Pose, ...]
    rms: float
    per_image_rms: np.ndarray = field(repr=False)
    f_err: float | None = None
    converged: bool = True

    def to_json_dict(self, names: tuple[str, ...] | None = None) -> dict[str, Any]:
        d: dict[str, Any] = {
            "intrinsics": self.intrinsics.to_json_dict(),
            "rms": self.rms,
            "per_image_rms": [float(v) for v in self.per_image_rms],
            "converged": self.converged,
        }
        if names is not None:
            d["images"] = list(names)
        if self.f_err is not None:
            d["f_err"] = self.f_err
        return d


def deviation_error(f: float, f_gt: float) -> float:
    """Relative focal-length deviation |f - f_gt| / f_gt."""
    if not f_gt > 0.0:
        raise ValueError(f"f_gt must be > 0, got {f_gt}")
    return abs(f - f_gt) / f_gt


def _estimate_pose_named(intr: Intrinsics, data: CorrespondenceSet, i: int) -> Pose:
    try:
        return estimate_planar_pose(intr, data.board, data.points[i])
    except PoseEstimationError as e:
        raise PoseEstimationError(str(e), image_name=data.names[i]) from e
    except (DomainError, NotImageableError) as e:
        raise PoseEstimationError(
            f"pose estimation failed: {e}", image_name=data.names[i]
        ) from e


def rms_reprojection(
    intr: Intrinsics, data: CorrespondenceSet, f_gt: float | None = None
) -> CalibrationReport:
    """Evaluate intrinsics against correspondences.

    Poses are not an input: each image's pose is re-estimated from its own
    corners under the candidate intrinsics, so the score reflects intrinsics
    quality alone.

    Raises:
        PoseEstimationError: (carrying the image name) if any image fails.
    """
    board_pts = data.board.corner_points()
    poses = []
    per_image = np.empty(data.n_images)
    total = 0.0
    for i in range(data.n_images):
        pose = _estimate_pose_named(intr, data, i)
        try:
            proj = project(intr, pose, board_pts)
        except NotImageableError as e:
            raise PoseEstimationError(str(e), image_name=data.names[i]) from e
        d2 = np.sum((proj - data.points[i]) ** 2, axis=1)
        per_image[i] = math.sqrt(float(np.mean(d2)))
        total += float(np.sum(d2))
        poses.append(pose)
    rms = math.sqrt(total / (data.n_images * data.board.n_corners))
    err = deviation_error(intr.f, f_gt) if f_gt is not None else None
    return CalibrationReport(intr, tuple(poses), rms, per_image, f_err=err)


# ---------------------------------------------------------------------------
# Joint optimization


class _Problem:
    """Parameter packing and residuals for the joint LM problem.

    Layout: [log f, sqrt(omega)] (+ [cx, cy] when enabled) + 6 per image
    (axis-angle, translation).  log f keeps the focal positive, sqrt(omega)
    keeps the distortion non-negative.
    """

    def __init__(self, data: CorrespondenceSet, model: RadialModel, optimize_pp: bool):
        self.data = data
        self.model = model
        self.optimize_pp = optimize_pp
        self.board_pts = data.board.corner_points()
        self.n_images = data.n_images
        self.n_intr = 4 if optimize_pp else 2
        self.n_params = self.n_intr + 6 * self.n_images
        self.block = 2 * data.board.n_corners  # residual entries per image
        self.default_cx = data.width / 2.0
        self.default_cy = data.height / 2.0

    def pack(self, intr: Intrinsics, poses: list[Pose]) -> np.ndarray:
        p = np.empty(self.n_params)
        p[0] = math.log(intr.f)
        p[1] = math.sqrt(intr.omega)
        if self.optimize_pp:
            p[2], p[3] = intr.cx, intr.cy
        for i, pose in enumerate(poses):
            base = self.n_intr + 6 * i
            p[base : base + 3] = pose.rvec
            p[base + 3 : base + 6] = pose.translation
        return p

    def unpack_intr(self, p: np.ndarray) -> tuple[float, float, float, float]:
        f = math.exp(p[0])
        omega = p[1] * p[1]
        if self.optimize_pp:
            return f, omega, float(p[2]), float(p[3])
        return f, omega, self.default_cx, self.default_cy

    def image_residual(self, p: np.ndarray, i: int) -> np.ndarray | None:
        """Residual block for image i, or None if the trial cannot image it."""
        f, omega, cx, cy = self.unpack_intr(p)
        base = self.n_intr + 6 * i
        R = rotation_from_rvec(p[base : base + 3])
        t = p[base + 3 : base + 6]
        try:
            proj = project_params(f, omega, cx, cy, self.model, R, t, self.board_pts)
        except NotImageableError:
            return None
        res = (proj - self.data.points[i]).ravel()
        if not np.all(np.isfinite(res)):
            return None
        return res

    def residuals(self, p: np.ndarray) -> np.ndarray | None:
        out = np.empty(self.block * self.n_images)
        for i in range(self.n_images):
            r = self.image_residual(p, i)
            if r is None:
                return None
            out[i * self.block : (i + 1) * self.block] = r
        return out

    def jacobian(self, p: np.ndarray, res0: np.ndarray) -> np.ndarray:
        """Forward-difference Jacobian, exploiting the block-sparse structure.

        Intrinsic columns touch every residual; each pose column touches only
        its image's block.  A perturbation that makes a block unimageable
        contributes a zero column there (the parameter is pinned for this
        iteration).
        """
        J = np.zeros((res0.size, self.n_params))
        for j in range(self.n_intr):
            h = 1e-7 * max(1.0, abs(p[j]))
            pj = p.copy()
            pj[j] += h
            rj = self.residuals(pj)
            if rj is not None:
                J[:, j] = (rj - res0) / h
        for i in range(self.n_images):
            sl = slice(i * self.block, (i + 1) * self.block)
            r0_i = res0[sl]
            for k in range(6):
                j = self.n_intr + 6 * i + k
                h = 1e-7 * max(1.0, abs(p[j]))
                pj = p.copy()
                pj[j] += h
                rj = self.image_residual(pj, i)
                if rj is not None:
                    J[sl, j] = (rj - r0_i) / h
        return J


def full_calibrate(
    data: CorrespondenceSet,
    init: Intrinsics,
    config: RefineConfig = RefineConfig(),
) -> CalibrationReport:
    """Jointly refine intrinsics and all poses by Levenberg-Marquardt.

    Poses are initialized by planar pose estimation under ``init``.  Damping
    follows Marquardt's classic schedule: scale by ``lambda_up`` on a rejected
    step, ``lambda_down`` on an accepted one.  Accepted cost is monotone
    non-increasing; the run stops when the relative cost decrease of an
    accepted step falls below ``cost_tol``, or stalls once lambda exceeds
    1e12 (reported via ``converged=False``).
    """
    if data.width != init.width or data.height != init.height:
        raise DomainError(
            f"dataset image size {data.width}x{data.height} does not match "
            f"intrinsics {init.width}x{init.height}"
        )
    problem = _Problem(data, init.model, config.optimize_principal_point)
    init_poses = [_estimate_pose_named(init, data, i) for i in range(data.n_images)]
    params = problem.pack(init, init_poses)
    res = problem.residuals(params)
    if res is None:
        raise PoseEstimationError("initial poses do not image the board")
    cost = float(res @ res)
    lam = config.lambda0
    converged = False
    # Below an RMS of 1e-12 px per residual the cost is float noise; stop
    # rather than let the damping schedule chase it to the stall ceiling.
    cost_floor = res.size * 1e-24
    for _ in range(config.max_iters):
        if cost <= cost_floor:
            converged = True
            break
        J = problem.jacobian(params, res)
        g = J.T @ res
        JtJ = J.T @ J
        D = np.maximum(np.diag(JtJ), 1e-12)
        accepted = False
        while True:
            try:
                step = np.linalg.solve(JtJ + lam * np.diag(D), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                trial = params + step
                r_trial = problem.residuals(trial)
                if r_trial is not None:
                    c_trial = float(r_trial @ r_trial)
                    if c_trial < cost:
                        rel_drop = (cost - c_trial) / max(cost, 1e-300)
                        params, res, cost = trial, r_trial, c_trial
                        lam *= config.lambda_down
                        accepted = True
                        if rel_drop < config.cost_tol:
                            converged = True
                        break
            lam *= config.lambda_up
            if lam > _LAMBDA_CEILING:
                break
        if not accepted or converged:
            break

    f, omega, cx, cy = problem.unpack_intr(params)
    intr = Intrinsics(f, cx, cy, omega, init.model, init.width, init.height)
    poses = []
    for i in range(problem.n_images):
        base = problem.n_intr + 6 * i
        poses.append(
            Pose(rotation_from_rvec(params[base : base + 3]), params[base + 3 : base + 6])
        )
    n_total = data.n_images * data.board.n_corners
    per_image = np.array(
        [
            math.sqrt(float(np.mean(np.sum(
                (res[i * problem.block : (i + 1) * problem.block].reshape(-1, 2)) ** 2,
                axis=1,
            ))))
            for i in range(problem.n_images)
        ]
    )
    return CalibrationReport(
        intr,
        tuple(poses),
        math.sqrt(cost / n_total),
        per_image,
        converged=converged,
    )


@dataclass(frozen=True)
class SweepResult:
    """Single-shot sweep summary: per-fold and mean errors, in pixels."""

    eps_gen: float
    eps_fit: float
    gen: np.ndarray = field(repr=False)
    fit: np.ndarray = field(repr=False)
    focals: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "eps_gen": self.eps_gen,
            "eps_fit": self.eps_fit,
            "per_fold_gen": [float(v) for v in self.gen],
            "per_fold_fit": [float(v) for v in self.fit],
            "per_fold_f": [float(v) for v in self.focals],
        }


def single_shot_sweep(
    data: CorrespondenceSet,
    init: Intrinsics,
    config: RefineConfig = RefineConfig(),
    progress: Callable[[int, int], None] | None = None,
) -> SweepResult:
    """Calibrate from each image alone, then score against the whole set.

    For every image k: run :func:`full_calibrate` on that image only, record
    its fitting RMS (eps_fit), then evaluate the resulting intrinsics on all
    N images with re-estimated poses (eps_gen).  Returns the per-fold values
    and their means.
    """
    n = data.n_images
    if n < 2:
        raise ValueError("single-shot sweep requires at least 2 images")
    gen = np.empty(n)
    fit = np.empty(n)
    focals = np.empty(n)
    for k in range(n):
        report = full_calibrate(data.subset([k]), init, config)
        fit[k] = report.rms
        focals[k] = report.intrinsics.f
        gen[k] = rms_reprojection(report.intrinsics, data).rms
        if progress is not None:
            progress(k + 1, n)
    return SweepResult(float(gen.mean()), float(fit.mean()), gen, fit, focals)
