"""Camera description types and the radial distortion model family.

A fisheye lens maps the incidence angle theta of an incoming ray to an image
radius r_d.  With the single parameter ``omega`` (units 1/pixel, think of
``1/omega`` as the fisheye focal length) the supported laws are, for
``t = omega * r_u`` and ``theta = arctan(t)``:

    perspective      r_d = r_u                      (identity, no distortion)
    stereographic    r_d = (2/omega) * tan(theta/2)
    equidistance     r_d = (1/omega) * theta
    equisolid_angle  r_d = (2/omega) * sin(theta/2)
    orthographic     r_d = (1/omega) * sin(theta)

Here r_u is the radius the ideal pinhole camera with the same focal length
would produce.  All laws agree with the identity as omega -> 0, which is why a
single ``omega = 0`` value cleanly encodes "no distortion" for every model.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DomainError, FileFormatError

FORMAT_VERSION = 1

# Below this omega the distortion is indistinguishable from the identity at
# float64 resolution; the mapping functions switch to the exact identity.
OMEGA_IDENTITY_EPS = 1e-12


class RadialModel(Enum):
    """The radial projection law applied on top of the pinhole projection."""

    PERSPECTIVE = "perspective"
    STEREOGRAPHIC = "stereographic"
    EQUIDISTANCE = "equidistance"
    EQUISOLID_ANGLE = "equisolid_angle"
    ORTHOGRAPHIC = "orthographic"


# sup of omega * r_d for which the inverse mapping is defined (theta < pi/2)
_INVERSE_DOMAIN_BOUND = {
    RadialModel.PERSPECTIVE: math.inf,
    RadialModel.STEREOGRAPHIC: 2.0,
    RadialModel.EQUIDISTANCE: math.pi / 2.0,
    RadialModel.EQUISOLID_ANGLE: math.sqrt(2.0),
    RadialModel.ORTHOGRAPHIC: 1.0,
}


def inverse_domain_bound(model: RadialModel) -> float:
    """Return the supremum of ``omega * r_d`` for which the inverse is defined."""
    return _INVERSE_DOMAIN_BOUND[model]


def radial_forward(model: RadialModel, omega: float, r_u):
    """Map undistorted (pinhole) radii to distorted image radii.

    Args:
        model: radial projection law.
        omega: distortion parameter, >= 0.
        r_u: scalar or array of radii, >= 0, in pixels.

    Returns:
        r_d with the same shape as ``r_u`` (a float for scalar input).
    """
    if omega < 0.0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    r = np.asarray(r_u, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("r_u must be >= 0")
    scalar = r.ndim == 0
    if model is RadialModel.PERSPECTIVE or omega < OMEGA_IDENTITY_EPS:
        out = r.copy()
        return float(out) if scalar else out
    theta = np.arctan(omega * r)
    if model is RadialModel.EQUIDISTANCE:
        out = theta / omega
    elif model is RadialModel.STEREOGRAPHIC:
        out = 2.0 / omega * np.tan(0.5 * theta)
    elif model is RadialModel.EQUISOLID_ANGLE:
        out = 2.0 / omega * np.sin(0.5 * theta)
    elif model is RadialModel.ORTHOGRAPHIC:
        out = np.sin(theta) / omega
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown model {model}")
    return float(out) if scalar else out


def radial_inverse(model: RadialModel, omega: float, r_d):
    """Map distorted image radii back to undistorted (pinhole) radii.

    Inverse of :func:`radial_forward`.  Defined only while the incidence angle
    stays below 90 degrees, i.e. ``omega * r_d < inverse_domain_bound(model)``.

    Raises:
        DomainError: if any radius falls outside the invertible range.
    """
    if omega < 0.0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    r = np.asarray(r_d, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("r_d must be >= 0")
    scalar = r.ndim == 0
    if model is RadialModel.PERSPECTIVE or omega < OMEGA_IDENTITY_EPS:
        out = r.copy()
        return float(out) if scalar else out
    t = omega * r
    bound = _INVERSE_DOMAIN_BOUND[model]
    if np.any(t >= bound):
        raise DomainError(
            f"field of view exceeds model domain: omega*r_d reaches "
            f"{float(np.max(t)):.6g}, limit is {bound:.6g} for {model.value}"
        )
    if model is RadialModel.EQUIDISTANCE:
        theta = t
    elif model is RadialModel.STEREOGRAPHIC:
        theta = 2.0 * np.arctan(0.5 * t)
    elif model is RadialModel.EQUISOLID_ANGLE:
        theta = 2.0 * np.arcsin(0.5 * t)
    elif model is RadialModel.ORTHOGRAPHIC:
        theta = np.arcsin(t)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown model {model}")
    out = np.tan(theta) / omega
    return float(out) if scalar else out


@dataclass(frozen=True)
class CameraSpec:
    """Manufacturer-style camera description: image size plus field of view.

    ``fov_v_deg`` may be None when the data sheet only states a horizontal
    (or diagonal-converted) field of view.
    """

    name: str
    width: int
    height: int
    fov_h_deg: float
    fov_v_deg: float | None = None
    model: RadialModel = RadialModel.EQUIDISTANCE

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.height < 1:
            raise ValueError(f"height must be >= 1, got {self.height}")
        if not 0.0 < self.fov_h_deg < 180.0:
            raise ValueError(f"fov_h_deg must lie in (0, 180), got {self.fov_h_deg}")
        if self.fov_v_deg is not None and not 0.0 < self.fov_v_deg < 180.0:
            raise ValueError(f"fov_v_deg must lie in (0, 180), got {self.fov_v_deg}")

    def to_json_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "fov_h_deg": self.fov_h_deg,
            "model": self.model.value,
        }
        if self.fov_v_deg is not None:
            d["fov_v_deg"] = self.fov_v_deg
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "CameraSpec":
        _require_object(d, "camera spec")
        name = _get(d, "name", str)
        width = _get(d, "width", int)
        height = _get(d, "height", int)
        fov_h = float(_get(d, "fov_h_deg", (int, float)))
        fov_v = d.get("fov_v_deg")
        if fov_v is not None:
            if not isinstance(fov_v, (int, float)) or isinstance(fov_v, bool):
                raise FileFormatError("camera spec field 'fov_v_deg' must be a number")
            fov_v = float(fov_v)
        model = _parse_model(d.get("model", RadialModel.EQUIDISTANCE.value))
        try:
            return cls(name, width, height, fov_h, fov_v, model)
        except ValueError as e:
            raise DomainError(f"camera spec invalid: {e}") from e


@dataclass(frozen=True)
class Intrinsics:
    """Calibrated camera: focal length, principal point, and distortion.

    The focal length f is shared between the axes (square pixels); cx, cy are
    in pixels with the convention that integer coordinates address pixel
    centers and the image center is (width/2, height/2).
    """

    f: float
    cx: float
    cy: float
    omega: float
    model: RadialModel
    width: int
    height: int

    def __post_init__(self) -> None:
        if not self.f > 0.0:
            raise ValueError(f"f must be > 0, got {self.f}")
        if self.omega < 0.0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        half_diag = math.hypot(self.width / 2.0, self.height / 2.0)
        if self.omega >= OMEGA_IDENTITY_EPS:
            if self.omega * half_diag >= inverse_domain_bound(self.model):
                raise DomainError(
                    f"field of view exceeds model domain: half-diagonal "
                    f"{half_diag:.2f}px is not invertible at omega={self.omega:.6g} "
                    f"({self.model.value})"
                )

    @property
    def half_diagonal(self) -> float:
        return math.hypot(self.width / 2.0, self.height / 2.0)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "f": self.f,
            "cx": self.cx,
            "cy": self.cy,
            "omega": self.omega,
            "model": self.model.value,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "Intrinsics":
        _require_object(d, "intrinsics")
        try:
            return cls(
                f=float(_get(d, "f", (int, float))),
                cx=float(_get(d, "cx", (int, float))),
                cy=float(_get(d, "cy", (int, float))),
                omega=float(_get(d, "omega", (int, float))),
                model=_parse_model(_get(d, "model", str)),
                width=_get(d, "width", int),
                height=_get(d, "height", int),
            )
        except ValueError as e:
            raise DomainError(f"intrinsics invalid: {e}") from e


def intrinsics_from_spec(spec: CameraSpec, f: float, omega: float) -> Intrinsics:
    """Assemble intrinsics for ``spec`` with the principal point at the image center."""
    return Intrinsics(
        f=f,
        cx=spec.width / 2.0,
        cy=spec.height / 2.0,
        omega=omega,
        model=spec.model,
        width=spec.width,
        height=spec.height,
    )


# ---------------------------------------------------------------------------
# JSON file helpers


def _require_object(d: Any, what: str) -> None:
    if not isinstance(d, dict):
        raise FileFormatError(f"{what} must be a JSON object, got {type(d).__name__}")


def _get(d: dict[str, Any], key: str, types) -> Any:
    if key not in d:
        raise FileFormatError(f"missing required field '{key}'")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, types):
        raise FileFormatError(f"field '{key}' has wrong type {type(v).__name__}")
    return v


def _parse_model(token: Any) -> RadialModel:
    try:
        return RadialModel(token)
    except ValueError:
        names = ", ".join(m.value for m in RadialModel)
        raise FileFormatError(f"unknown model '{token}' (expected one of: {names})") from None


def _load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path} is not valid JSON: {e}") from e


def load_camera_spec(path: str | Path) -> CameraSpec:
    return CameraSpec.from_json_dict(_load_json(path))


def load_intrinsics(path: str | Path) -> Intrinsics:
    return Intrinsics.from_json_dict(_load_json(path))


def save_camera_spec(path: str | Path, spec: CameraSpec) -> None:
    Path(path).write_text(json.dumps(spec.to_json_dict(), indent=2) + "\n")


def save_intrinsics(path: str | Path, intr: Intrinsics) -> None:
    Path(path).write_text(json.dumps(intr.to_json_dict(), indent=2) + "\n")
