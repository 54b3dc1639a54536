"""Image I/O, rectification maps, and bilinear resampling.

Images are row-major uint8 arrays, one or three channels.  The pixel
convention matches the rest of the package: integer coordinates are pixel
centers.  Files use binary PPM (P6) for color and PGM (P5) for grayscale,
always with maxval 255.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .model import Intrinsics, radial_forward, radial_inverse

_TINY = 1e-12


@dataclass(frozen=True)
class Image:
    """An 8-bit image; ``pixels`` has shape (height, width, channels)."""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.pixels)
        if p.ndim == 2:
            p = p[:, :, np.newaxis]
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (H, W) or (H, W, 1|3), got {p.shape}")
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        p = np.ascontiguousarray(p)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def read_ppm(path: str | Path) -> Image:
    """Read a binary PPM (P6) or PGM (P5) file with maxval 255."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise FileFormatError(f"cannot read {path}: {e}") from e
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(raw):
            if raw[pos : pos + 1].isspace():
                pos += 1
            elif raw[pos : pos + 1] == b"#":
                while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError(f"{path}: truncated header")
        return raw[start:pos]

    magic = next_token()
    if magic not in (b"P5", b"P6"):
        raise FileFormatError(f"{path}: unsupported magic {magic!r} (want P5 or P6)")
    channels = 3 if magic == b"P6" else 1
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as e:
        raise FileFormatError(f"{path}: bad header: {e}") from e
    if maxval != 255:
        raise FileFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * channels
    data = raw[pos : pos + expected]
    if len(data) != expected:
        raise FileFormatError(
            f"{path}: expected {expected} pixel bytes, got {len(data)}"
        )
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels)
    return Image(pixels.copy())


def write_ppm(path: str | Path, image: Image) -> None:
    """Write binary PPM (color) or PGM (grayscale), maxval 255, no comments."""
    magic = b"P6" if image.channels == 3 else b"P5"
    header = magic + b"\n%d %d\n255\n" % (image.width, image.height)
    Path(path).write_bytes(header + image.pixels.tobytes())


# ---------------------------------------------------------------------------
# Rectification


@dataclass(frozen=True)
class RectifyMap:
    """Per-output-pixel source coordinates for resampling.

    ``map_x``/``map_y`` have the output shape; entries may be NaN or out of
    source bounds, in which case :func:`remap` writes black.  ``src_width``/
    ``src_height`` record the source the map was built for.
    """

    src_width: int
    src_height: int
    new_f: float
    map_x: np.ndarray = field(repr=False)
    map_y: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mx = np.asarray(self.map_x, dtype=float)
        my = np.asarray(self.map_y, dtype=float)
        if mx.ndim != 2 or mx.shape != my.shape:
            raise ValueError("map_x and map_y must be equal-shaped 2-D arrays")
        for name, a in (("map_x", mx), ("map_y", my)):
            frozen = np.ascontiguousarray(a)
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    @property
    def out_height(self) -> int:
        return self.map_x.shape[0]

    @property
    def out_width(self) -> int:
        return self.map_x.shape[1]


def fit_all_focal(intr: Intrinsics, out_width: int | None = None,
                  out_height: int | None = None) -> float:
    """Output focal that maps the output corner onto the source corner.

    Shrinks the rectified focal so the entire distorted frame (out to the
    half-diagonal) fits inside the output.
    """
    ow = intr.width if out_width is None else out_width
    oh = intr.height if out_height is None else out_height
    half_diag_src = intr.half_diagonal
    half_diag_out = float(np.hypot(ow / 2.0, oh / 2.0))
    r_u_corner = radial_inverse(intr.model, intr.omega, half_diag_src)
    return intr.f * half_diag_out / r_u_corner


def build_rectify_map(
    intr: Intrinsics,
    out_width: int | None = None,
    out_height: int | None = None,
    new_f: float | None = None,
) -> RectifyMap:
    """Build the map that undistorts an image from ``intr`` to a pinhole view.

    The output camera shares the ray geometry: an output pixel at radius rho
    from the output center sees the ray with tan(theta) = rho / new_f, which
    the source camera images at radius radial_forward(omega, f tan(theta)).
    Defaults: output size equals the source size and ``new_f`` equals the
    source focal length (so omega = 0 yields the identity map).
    """
    ow = intr.width if out_width is None else out_width
    oh = intr.height if out_height is None else out_height
    if ow < 1 or oh < 1:
        raise ValueError("output size must be at least 1x1")
    nf = intr.f if new_f is None else float(new_f)
    if not nf > 0.0:
        raise ValueError(f"new_f must be > 0, got {new_f}")
    xs = np.arange(ow, dtype=float) - ow / 2.0
    ys = np.arange(oh, dtype=float) - oh / 2.0
    dx, dy = np.meshgrid(xs, ys)
    rho = np.hypot(dx, dy)
    r_u = intr.f * rho / nf
    r_d = radial_forward(intr.model, intr.omega, r_u)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(rho > _TINY, r_d / np.maximum(r_u, _TINY), 1.0) * (intr.f / nf)
    map_x = intr.cx + dx * s
    map_y = intr.cy + dy * s
    return RectifyMap(intr.width, intr.height, nf, map_x, map_y)


def sample_bilinear(src: Image, map_x: np.ndarray, map_y: np.ndarray) -> Image:
    """Resample ``src`` at the given coordinates with bilinear interpolation.

    Coordinates outside [0, W-1] x [0, H-1] (or NaN) produce black pixels.
    """
    h, w = src.height, src.width
    x = np.asarray(map_x, dtype=float)
    y = np.asarray(map_y, dtype=float)
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(x) & np.isfinite(y)
        valid &= (x >= 0.0) & (x <= w - 1.0) & (y >= 0.0) & (y <= h - 1.0)
    xs = np.where(valid, x, 0.0)
    ys = np.where(valid, y, 0.0)
    x0 = np.clip(np.floor(xs).astype(int), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(ys).astype(int), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., np.newaxis]
    fy = (ys - y0)[..., np.newaxis]
    p = src.pixels.astype(float)
    val = (
        p[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + p[y0, x1] * fx * (1.0 - fy)
        + p[y1, x0] * (1.0 - fx) * fy
        + p[y1, x1] * fx * fy
    )
    out = np.where(valid[..., np.newaxis], np.rint(val), 0.0).astype(np.uint8)
    return Image(out)


def remap(src: Image, rmap: RectifyMap) -> Image:
    """Apply a rectification map to an image.

    Raises:
        ValueError: if the map was built for different source dimensions.
    """
    if src.width != rmap.src_width or src.height != rmap.src_height:
        raise ValueError(
            f"map expects a {rmap.src_width}x{rmap.src_height} source, "
            f"got {src.width}x{src.height}"
        )
    return sample_bilinear(src, rmap.map_x, rmap.map_y)
