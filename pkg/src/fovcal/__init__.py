"""Fisheye camera calibration from manufacturer FOV specs.

Estimate a focal length and a one-parameter radial distortion from nothing
but the advertised field of view, evaluate and refine the estimate against
checkerboard correspondences, and rectify images.
"""
from .errors import (
    CalibrationError,
    ConvergenceError,
    DomainError,
    FileFormatError,
    NotImageableError,
    PoseEstimationError,
)
from .geometry import (
    BoardSpec,
    CorrespondenceSet,
    Pose,
    estimate_planar_pose,
    homography_dlt,
    load_correspondences,
    project,
    save_correspondences,
    unproject,
)
from .imaging import (
    Image,
    RectifyMap,
    build_rectify_map,
    fit_all_focal,
    read_ppm,
    remap,
    sample_bilinear,
    write_ppm,
)
from .model import (
    CameraSpec,
    Intrinsics,
    RadialModel,
    intrinsics_from_spec,
    inverse_domain_bound,
    load_camera_spec,
    load_intrinsics,
    radial_forward,
    radial_inverse,
    save_camera_spec,
    save_intrinsics,
)
from .refine import (
    CalibrationReport,
    RefineConfig,
    SweepResult,
    deviation_error,
    full_calibrate,
    rms_reprojection,
    single_shot_sweep,
)
from .synth import (
    SynthScenario,
    derive_spec,
    distort_image,
    generate_correspondences,
    load_scenario,
    random_poses,
    render_gradient_image,
    render_grid_image,
)
from .zeroshot import (
    SolverConfig,
    ZeroShotResult,
    objective_J,
    objective_J_stable,
    perspective_focal,
    solve_omega,
    solve_omega_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "BoardSpec",
    "CalibrationError",
    "CalibrationReport",
    "CameraSpec",
    "ConvergenceError",
    "CorrespondenceSet",
    "DomainError",
    "FileFormatError",
    "Image",
    "Intrinsics",
    "NotImageableError",
    "Pose",
    "PoseEstimationError",
    "RadialModel",
    "RectifyMap",
    "RefineConfig",
    "SolverConfig",
    "SweepResult",
    "SynthScenario",
    "ZeroShotResult",
    "build_rectify_map",
    "derive_spec",
    "deviation_error",
    "distort_image",
    "estimate_planar_pose",
    "fit_all_focal",
    "full_calibrate",
    "generate_correspondences",
    "homography_dlt",
    "intrinsics_from_spec",
    "inverse_domain_bound",
    "load_camera_spec",
    "load_correspondences",
    "load_intrinsics",
    "load_scenario",
    "objective_J",
    "objective_J_stable",
    "perspective_focal",
    "project",
    "radial_forward",
    "radial_inverse",
    "random_poses",
    "read_ppm",
    "remap",
    "render_gradient_image",
    "render_grid_image",
    "rms_reprojection",
    "sample_bilinear",
    "save_camera_spec",
    "save_correspondences",
    "save_intrinsics",
    "single_shot_sweep",
    "solve_omega",
    "solve_omega_oracle",
    "unproject",
    "write_ppm",
]
