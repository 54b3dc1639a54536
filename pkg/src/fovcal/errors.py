"""Exception types shared across the package.

The CLI maps these onto exit codes: structural problems with input files
(:class:`FileFormatError`) exit 1 alongside usage errors, while semantic
failures (:class:`CalibrationError` subclasses) exit 2.
"""
from __future__ import annotations


class CalibrationError(Exception):
    """Base class for semantic failures: bad domains, divergence, degeneracy."""


class DomainError(CalibrationError):
    """A value falls outside the region where a mapping is defined."""


class NotImageableError(CalibrationError):
    """A world point cannot be projected (behind the camera or outside the model domain)."""


class ConvergenceError(CalibrationError):
    """An iterative solver failed to reach its tolerance.

    Carries the last iterate so callers can inspect how far it got.
    """

    def __init__(self, message: str, last_omega: float | None = None, iterations: int = 0):
        super().__init__(message)
        self.last_omega = last_omega
        self.iterations = iterations


class PoseEstimationError(CalibrationError):
    """Planar pose recovery failed for one image."""

    def __init__(self, message: str, image_name: str | None = None):
        super().__init__(message)
        self.image_name = image_name


class FileFormatError(Exception):
    """An input file is malformed or missing required structure."""
