"""Synthetic scenario generation: ground-truth cameras, poses, and data.

Everything here is deterministic given a seed.  Random draws go through
``numpy.random.default_rng`` (PCG64) generators consumed sequentially, so
regenerating a scenario with the same seed is byte-identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileFormatError, NotImageableError
from .geometry import BoardSpec, CorrespondenceSet, Pose, project, rotation_from_rvec
from .imaging import Image, sample_bilinear
from .model import CameraSpec, Intrinsics, inverse_domain_bound, radial_inverse


@dataclass(frozen=True)
class SynthScenario:
    """A ground-truth camera observing a board from fixed poses, plus noise."""

    intrinsics: Intrinsics
    board: BoardSpec
    poses: tuple[Pose, ...]
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if len(self.poses) == 0:
            raise ValueError("at least one pose is required")


def derive_spec(
    intr: Intrinsics,
    name: str = "derived",
    width: int | None = None,
    height: int | None = None,
) -> CameraSpec:
    """Recover the manufacturer-style FOV spec a camera would advertise.

    The horizontal FOV is twice the incidence angle imaged at the horizontal
    half-extent: theta_h = 2 atan(radial_inverse(omega, W/2) / f), and
    likewise vertically.

    Raises:
        DomainError: if a half-extent lies outside the invertible range.
    """
    w = intr.width if width is None else width
    h = intr.height if height is None else height
    r_u_h = radial_inverse(intr.model, intr.omega, w / 2.0)
    r_u_v = radial_inverse(intr.model, intr.omega, h / 2.0)
    fov_h = 2.0 * math.degrees(math.atan(r_u_h / intr.f))
    fov_v = 2.0 * math.degrees(math.atan(r_u_v / intr.f))
    return CameraSpec(name, w, h, fov_h, fov_v, intr.model)


def _board_in_frame(intr: Intrinsics, board: BoardSpec, pose: Pose) -> bool:
    try:
        uv = project(intr, pose, board.corner_points())
    except NotImageableError:
        return False
    return bool(
        np.all(uv[:, 0] >= 0.0)
        and np.all(uv[:, 0] <= intr.width - 1.0)
        and np.all(uv[:, 1] >= 0.0)
        and np.all(uv[:, 1] <= intr.height - 1.0)
    )


def random_poses(
    intr: Intrinsics,
    board: BoardSpec,
    n: int,
    rng: np.random.Generator,
    max_tilt_deg: float = 40.0,
    max_attempts: int = 10_000,
) -> tuple[Pose, ...]:
    """Sample n poses keeping the whole board inside the frame.

    The board center sits at a depth of 0.5 to 2.0 board widths, offset so its
    center pixel lands in the middle half of the image; orientation is a
    uniform random axis with tilt up to ``max_tilt_deg``.  Candidates whose
    corners leave the frame are rejected and redrawn.
    """
    board_w = (board.cols - 1) * board.square_size
    board_h = (board.rows - 1) * board.square_size
    center_board = np.array([board_w / 2.0, board_h / 2.0, 0.0])
    poses: list[Pose] = []
    attempts = 0
    while len(poses) < n:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"could not place {n} boards in frame after {max_attempts} attempts"
            )
        attempts += 1
        depth = rng.uniform(0.5, 2.0) * board_w
        u = rng.uniform(0.25 * intr.width, 0.75 * intr.width)
        v = rng.uniform(0.25 * intr.height, 0.75 * intr.height)
        # Pinhole-ish placement of the board center at that pixel.
        cam_center = np.array(
            [(u - intr.cx) * depth / intr.f, (v - intr.cy) * depth / intr.f, depth]
        )
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        tilt = math.radians(rng.uniform(0.0, max_tilt_deg))
        R = rotation_from_rvec(axis * tilt)
        t = cam_center - R @ center_board
        try:
            pose = Pose(R, t)
        except ValueError:
            continue
        if _board_in_frame(intr, board, pose):
            poses.append(pose)
    return tuple(poses)


def load_scenario(path: str | Path) -> SynthScenario:
    """Load a scenario description and sample its poses deterministically.

    The file specifies the ground-truth camera, board, image count, noise
    level, and seed::

        {"format_version": 1,
         "intrinsics": {...}, "board": {"rows":, "cols":, "square_size":},
         "n_images": 12, "noise_sigma": 0.5, "seed": 7, "max_tilt_deg": 40}

    Poses come from :func:`random_poses` driven by ``seed``, so the same file
    always produces the same scenario.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(d, dict):
        raise FileFormatError("scenario must be a JSON object")
    for key in ("intrinsics", "board", "n_images"):
        if key not in d:
            raise FileFormatError(f"scenario is missing field '{key}'")
    intr = Intrinsics.from_json_dict(d["intrinsics"])
    board_d = d["board"]
    if not isinstance(board_d, dict):
        raise FileFormatError("scenario 'board' must be an object")
    try:
        board = BoardSpec(
            int(board_d["rows"]), int(board_d["cols"]), float(board_d["square_size"])
        )
        n_images = int(d["n_images"])
        noise_sigma = float(d.get("noise_sigma", 0.0))
        seed = int(d.get("seed", 0))
        max_tilt = float(d.get("max_tilt_deg", 40.0))
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"scenario invalid: {e}") from e
    if n_images < 1:
        raise FileFormatError(f"n_images must be >= 1, got {n_images}")
    rng = np.random.default_rng(seed)
    poses = random_poses(intr, board, n_images, rng, max_tilt_deg=max_tilt)
    return SynthScenario(intr, board, poses, noise_sigma, seed)


def generate_correspondences(scenario: SynthScenario) -> CorrespondenceSet:
    """Project the board under every pose and add Gaussian pixel noise.

    With ``noise_sigma = 0`` the generator is skipped entirely and the points
    equal the projections exactly.

    Raises:
        ValueError: naming the offending pose index if any corner leaves the
            frame (or cannot be imaged at all).
    """
    intr = scenario.intrinsics
    board_pts = scenario.board.corner_points()
    rng = np.random.default_rng(scenario.seed)
    names = []
    points = []
    for i, pose in enumerate(scenario.poses):
        try:
            uv = project(intr, pose, board_pts)
        except NotImageableError as e:
            raise ValueError(f"pose {i} does not image the board: {e}") from e
        if not _board_in_frame(intr, scenario.board, pose):
            raise ValueError(f"pose {i} places board corners outside the image")
        if scenario.noise_sigma > 0.0:
            uv = uv + rng.normal(0.0, scenario.noise_sigma, size=uv.shape)
        names.append(f"img{i:03d}")
        points.append(uv)
    return CorrespondenceSet(
        scenario.board, intr.width, intr.height, tuple(names), tuple(points)
    )


# ---------------------------------------------------------------------------
# Synthetic imagery (for the distortion/rectification round-trip tests)


def distort_image(src: Image, intr: Intrinsics) -> Image:
    """Simulate what the fisheye ``intr`` sees of a pinhole rendering.

    ``src`` is treated as the view of an ideal pinhole camera with the same
    focal length, sampled about its own center (it may be larger than the
    fisheye frame: the fisheye sees a wider angle than a pinhole of equal
    focal length, so an oversized source avoids black corners).  The output
    has the intrinsics' dimensions.  Output radii beyond the model's
    invertible range come out black.
    """
    xs = np.arange(intr.width, dtype=float) - intr.cx
    ys = np.arange(intr.height, dtype=float) - intr.cy
    dx, dy = np.meshgrid(xs, ys)
    r_d = np.hypot(dx, dy)
    bound = inverse_domain_bound(intr.model)
    in_domain = intr.omega * r_d < bound
    r_d_safe = np.where(in_domain, r_d, 0.0)
    r_u = np.asarray(radial_inverse(intr.model, intr.omega, r_d_safe))
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r_d > 1e-12, r_u / np.maximum(r_d, 1e-12), 1.0)
    map_x = np.where(in_domain, src.width / 2.0 + dx * s, np.nan)
    map_y = np.where(in_domain, src.height / 2.0 + dy * s, np.nan)
    return sample_bilinear(src, map_x, map_y)


def render_grid_image(
    width: int,
    height: int,
    spacing: int = 80,
    line_width: int = 3,
    background: int = 235,
    foreground: int = 30,
) -> Image:
    """Render a straight-line grid test card.

    Lines are centered on multiples of ``spacing`` measured from the image
    center, so the central cross passes exactly through the principal point
    of a centered camera.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    img = np.full((height, width, 3), background, dtype=np.uint8)
    half = line_width // 2
    cx, cy = width // 2, height // 2
    for x in range(cx % spacing, width, spacing):
        img[:, max(0, x - half) : min(width, x + half + 1)] = foreground
    for y in range(cy % spacing, height, spacing):
        img[max(0, y - half) : min(height, y + half + 1), :] = foreground
    return Image(img)


def render_gradient_image(width: int, height: int) -> Image:
    """Smooth two-axis gradient test card."""
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    x = np.linspace(0.0, 255.0, width)
    y = np.linspace(0.0, 255.0, height)
    xx, yy = np.meshgrid(x, y)
    img = np.stack([xx, yy, 0.5 * (xx + yy)], axis=-1)
    return Image(np.rint(img).astype(np.uint8))
