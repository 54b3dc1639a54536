"""Estimate fisheye intrinsics from a manufacturer FOV spec alone.

The idea: a pinhole camera whose horizontal FOV matches the spec would have
focal length ``f_x = (W/2) / tan(theta_h/2)`` and likewise vertically.  On a
real fisheye the two disagree because distortion compresses the long axis
more.  For the equidistance law, requiring both FOVs to be explained by one
focal length f and one distortion omega yields a single-variable root-finding
problem in omega; f then follows in closed form.

The raw consistency residual

    J(omega) = tan(omega*W/2) / (omega * tan(theta_h/2))
             - tan(omega*H/2) / (omega * tan(theta_v/2))

is numerically awkward near omega = 0 (both terms blow up like 1/omega), so
the solver works on the rescaled residual

    J_stable(omega) = tan(theta_v/2)/tan(theta_h/2) - tan(omega*H/2)/tan(omega*W/2)

which shares J's sign and roots on (0, pi/W) and extends continuously to 0.
The tangent ratio is strictly decreasing in omega, so the root is unique
whenever one exists (i.e. whenever f_x < f_y at omega = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .model import CameraSpec

# Perspective focals within this relative distance are treated as equal: the
# implied distortion would be unresolvable and the solver clamps to omega = 0.
CLAMP_REL_TOL = 1e-4

# Keep iterates strictly inside (0, pi/W); the residual is singular at both ends.
_EDGE_MARGIN = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """Newton solver settings for the omega root-find.

    ``gamma`` is the initial step damping; it doubles every iteration until it
    reaches 1 (the residual's slope vanishes at omega = 0, so an undamped
    first step from a small start overshoots the domain).
    """

    omega0: float = 1e-4
    gamma: float = 0.1
    max_iters: int = 200
    tol: float = 1e-12
    derivative_step: float = 1e-9

    def __post_init__(self) -> None:
        if not self.omega0 > 0.0:
            raise ValueError("omega0 must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.max_iters < 30:
            raise ValueError("max_iters must be >= 30")
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")
        if not self.derivative_step > 0.0:
            raise ValueError("derivative_step must be > 0")


@dataclass(frozen=True)
class ZeroShotResult:
    """Output of the spec-only calibration.

    ``fx_perspective``/``fy_perspective`` are the per-axis pinhole focals the
    spec implies at omega = 0 (``fy_perspective`` is None without a vertical
    FOV).  ``clamped`` marks the degenerate cases where no distortion can be
    inferred and omega_star is pinned to 0.
    """

    omega_star: float
    f_star: float
    fx_perspective: float
    fy_perspective: float | None
    clamped: bool
    iterations: int


def perspective_focal(half_extent: float, fov_deg: float) -> float:
    """Pinhole focal length (pixels) for a half image extent and a full FOV."""
    if not half_extent > 0.0:
        raise ValueError(f"half_extent must be > 0, got {half_extent}")
    if not 0.0 < fov_deg < 180.0:
        raise ValueError(f"fov_deg must lie in (0, 180), got {fov_deg}")
    return half_extent / math.tan(math.radians(fov_deg) / 2.0)


def _check_domain(omega: float, spec: CameraSpec) -> None:
    if not 0.0 < omega < math.pi / spec.width:
        raise DomainError(
            f"omega must lie in (0, pi/width) = (0, {math.pi / spec.width:.6g}), "
            f"got {omega:.6g}"
        )


def _fov_tangents(spec: CameraSpec) -> tuple[float, float]:
    if spec.fov_v_deg is None:
        raise ValueError("spec has no vertical FOV; the residual is undefined")
    th = math.tan(math.radians(spec.fov_h_deg) / 2.0)
    tv = math.tan(math.radians(spec.fov_v_deg) / 2.0)
    return th, tv


def objective_J(omega: float, spec: CameraSpec) -> float:
    """Raw FOV-consistency residual; ill-conditioned near omega = 0."""
    _check_domain(omega, spec)
    th, tv = _fov_tangents(spec)
    return (
        math.tan(omega * spec.width / 2.0) / (omega * th)
        - math.tan(omega * spec.height / 2.0) / (omega * tv)
    )


def objective_J_stable(omega: float, spec: CameraSpec) -> float:
    """Rescaled residual with the same roots as :func:`objective_J` on (0, pi/W)."""
    _check_domain(omega, spec)
    th, tv = _fov_tangents(spec)
    return tv / th - math.tan(omega * spec.height / 2.0) / math.tan(omega * spec.width / 2.0)


def _f_star_at(omega: float, spec: CameraSpec) -> float:
    """Closed-form focal length once omega is known (average of the two axes)."""
    th, tv = _fov_tangents(spec)
    fx = math.tan(omega * spec.width / 2.0) / (omega * th)
    fy = math.tan(omega * spec.height / 2.0) / (omega * tv)
    return 0.5 * (fx + fy)


def _clamped_result(spec: CameraSpec) -> ZeroShotResult | None:
    """Handle the cases where the spec carries no usable distortion signal."""
    fx = perspective_focal(spec.width / 2.0, spec.fov_h_deg)
    if spec.fov_v_deg is None:
        return ZeroShotResult(0.0, fx, fx, None, clamped=True, iterations=0)
    fy = perspective_focal(spec.height / 2.0, spec.fov_v_deg)
    # A root exists only when fx < fy.  Near-equality (including the exactly
    # symmetric square case) would put the root indistinguishably close to 0,
    # so treat it as distortion-free rather than chase numerical noise.
    if fx >= fy * (1.0 - CLAMP_REL_TOL):
        return ZeroShotResult(0.0, 0.5 * (fx + fy), fx, fy, clamped=True, iterations=0)
    return None


def solve_omega(spec: CameraSpec, config: SolverConfig = SolverConfig()) -> ZeroShotResult:
    """Solve the FOV-consistency equation for omega and recover the focal length.

    Damped Newton iteration on ``objective_J_stable`` with a central-difference
    derivative; the damping ramps off geometrically and steps that fail to
    reduce ``|J_stable|`` are backtracked.  Iterates are projected into the
    open interval (0, pi/W).

    Raises:
        ConvergenceError: if ``|J_stable|`` has not dropped below
            ``config.tol`` within ``config.max_iters`` accepted steps.
    """
    clamped = _clamped_result(spec)
    if clamped is not None:
        return clamped
    assert spec.fov_v_deg is not None
    fx = perspective_focal(spec.width / 2.0, spec.fov_h_deg)
    fy = perspective_focal(spec.height / 2.0, spec.fov_v_deg)

    # Iterates live in [lo, hi_iter]; derivative probes may reach slightly
    # beyond hi_iter but stay inside the pole at pi/W.
    edge = math.pi / spec.width
    lo = _EDGE_MARGIN
    hi_iter = edge * (1.0 - 1e-6)

    def residual(w: float) -> float:
        return objective_J_stable(w, spec)

    def tan_ratio(w: float) -> float:
        # J_stable = const - tan_ratio; even in w, so probing below 0 is harmless.
        return math.tan(w * spec.height / 2.0) / math.tan(w * spec.width / 2.0)

    omega = min(max(config.omega0, lo), hi_iter)
    value = residual(omega)
    for k in range(config.max_iters):
        if abs(value) < config.tol:
            return ZeroShotResult(
                omega, _f_star_at(omega, spec), fx, fy, clamped=False, iterations=k
            )
        # Central difference; shrink the probe near the upper domain edge
        # (omega <= hi_iter keeps this strictly positive).
        h = min(config.derivative_step, 0.49 * (edge - _EDGE_MARGIN - omega))
        deriv = (tan_ratio(omega - h) - tan_ratio(omega + h)) / (2.0 * h)
        if deriv == 0.0 or not math.isfinite(deriv):
            raise ConvergenceError(
                f"residual derivative vanished at omega={omega:.6g}", omega, k
            )
        gamma_k = min(1.0, config.gamma * 2.0**k)
        step = gamma_k * value / deriv
        # Backtrack until |J_stable| decreases (the residual is monotone, so
        # this always succeeds for a small enough step).
        accepted = False
        for _ in range(60):
            trial = min(max(omega - step, lo), hi_iter)
            trial_value = residual(trial)
            if abs(trial_value) < abs(value):
                omega, value = trial, trial_value
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"no descending Newton step at omega={omega:.6g} "
                f"(|J_stable|={abs(value):.3g})",
                omega,
                k,
            )
    if abs(value) < config.tol:
        return ZeroShotResult(
            omega, _f_star_at(omega, spec), fx, fy, clamped=False, iterations=config.max_iters
        )
    raise ConvergenceError(
        f"no convergence in {config.max_iters} iterations "
        f"(|J_stable|={abs(value):.3g} at omega={omega:.6g})",
        omega,
        config.max_iters,
    )


def solve_omega_oracle(spec: CameraSpec, n_scan: int = 10_000) -> ZeroShotResult:
    """Bracketing reference solver: sign scan over (0, pi/W) plus bisection.

    Slow but assumption-free; used to cross-check :func:`solve_omega`.
    Applies the same clamp rules, and clamps when the scan finds no sign
    change.
    """
    clamped = _clamped_result(spec)
    if clamped is not None:
        return clamped
    assert spec.fov_v_deg is not None
    fx = perspective_focal(spec.width / 2.0, spec.fov_h_deg)
    fy = perspective_focal(spec.height / 2.0, spec.fov_v_deg)

    lo = 1e-10
    hi = math.pi / spec.width - 1e-10
    grid = np.linspace(lo, hi, n_scan)
    values = [objective_J_stable(w, spec) for w in grid]
    bracket = None
    for i in range(n_scan - 1):
        if values[i] == 0.0:
            bracket = (grid[i], grid[i])
            break
        if values[i] * values[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        return ZeroShotResult(0.0, 0.5 * (fx + fy), fx, fy, clamped=True, iterations=0)
    a, b = bracket
    fa = objective_J_stable(a, spec)
    iterations = 0
    for iterations in range(1, 201):
        mid = 0.5 * (a + b)
        fm = objective_J_stable(mid, spec)
        if fm == 0.0 or (b - a) < 1e-18:
            a = b = mid
            break
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    omega = 0.5 * (a + b)
    return ZeroShotResult(omega, _f_star_at(omega, spec), fx, fy, clamped=False, iterations=iterations)
