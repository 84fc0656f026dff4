"""Raster conventions, error types and spatial filtering shared by all modules.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``; spectra
are complex arrays of the same shape with the DC bin at ``[0, 0]``.  Stacks of
frames or subbands carry extra leading axes and every filter here acts on the
last two axes only.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager

import numpy as np
from scipy import ndimage

# boundary name -> scipy.ndimage mode; "reflect" is half-sample symmetric (d c b a | a b c d)
_NDIMAGE_MODES = {"symmetric": "reflect", "periodic": "wrap"}

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class BurstError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(BurstError, ValueError):
    """An argument violates a documented precondition."""


class EmptySequenceError(InvalidInputError):
    """A frame sequence with no frames was requested or supplied."""


class UnsupportedVariantError(BurstError, ValueError):
    """A recognised but unimplemented accumulation variant was requested."""


def as_image(image, name: str = "image") -> np.ndarray:
    """Return ``image`` as a finite 2-D float64 array or raise."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf samples")
    return arr


def as_stack(frames, name: str = "burst") -> np.ndarray:
    """Stack a sequence of equally sized frames into an ``(M, H, W)`` array."""
    if isinstance(frames, np.ndarray):
        stack = np.asarray(frames, dtype=np.float64)
        if stack.ndim == 2:
            stack = stack[None]
    else:
        frames = list(frames)
        if not frames:
            raise EmptySequenceError(f"{name} contains no frames")
        shapes = {np.shape(f) for f in frames}
        if len(shapes) != 1:
            raise InvalidInputError(f"{name} frames have mismatched shapes: {sorted(shapes)}")
        stack = np.stack([np.asarray(f, dtype=np.float64) for f in frames])
    if stack.ndim != 3 or stack.shape[0] == 0 or stack.shape[1] == 0 or stack.shape[2] == 0:
        raise EmptySequenceError(f"{name} must be a non-empty (M, H, W) stack, got shape {stack.shape}")
    if not np.all(np.isfinite(stack)):
        raise InvalidInputError(f"{name} contains NaN or Inf samples")
    return stack


def _mode(boundary: str) -> str:
    try:
        return _NDIMAGE_MODES[boundary]
    except KeyError:
        raise InvalidInputError(
            f"boundary must be one of {sorted(_NDIMAGE_MODES)}, got {boundary!r}"
        ) from None


def boundary_index(n: int, shift: int, boundary: str) -> np.ndarray:
    """Source indices of positions ``arange(n) + shift`` under the boundary rule."""
    pos = np.arange(n) + shift
    if boundary == "periodic":
        return np.mod(pos, n)
    if boundary == "symmetric":
        k = np.mod(pos, 2 * n)
        return np.where(k >= n, 2 * n - 1 - k, k)
    raise InvalidInputError(f"boundary must be one of {sorted(_NDIMAGE_MODES)}, got {boundary!r}")


def check_kernel(kernel, normalized: bool = False) -> np.ndarray:
    """Validate a blur kernel: odd dimensions, center tap at the geometric center."""
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise InvalidInputError(f"kernel dimensions must be odd, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise InvalidInputError("kernel contains NaN or Inf taps")
    if normalized and abs(k.sum() - 1.0) > 1e-12:
        raise InvalidInputError(f"kernel sums to {k.sum()!r}, expected 1")
    return k


def gaussian_taps(sigma: float) -> np.ndarray:
    """Sampled 1-D Gaussian on radius ``ceil(4 sigma)``, renormalized to sum 1."""
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma!r}")
    radius = int(math.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    with np.errstate(over="ignore"):  # tiny sigma: off-center taps underflow to 0
        taps = np.exp(-0.5 * (x / sigma) ** 2)
    return taps / taps.sum()


def gaussian_kernel(sigma: float) -> np.ndarray:
    """2-D separable normalized Gaussian kernel."""
    g = gaussian_taps(sigma)
    k = np.outer(g, g)
    return k / k.sum()


def box_kernel(size: int) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise InvalidInputError(f"box size must be a positive odd integer, got {size}")
    return np.full((size, size), 1.0 / size**2)


def motion_kernel(length: int, angle_deg: float = 0.0) -> np.ndarray:
    """Normalized linear motion-blur kernel of odd support ``length``."""
    if length < 1 or length % 2 == 0:
        raise InvalidInputError(f"motion length must be a positive odd integer, got {length}")
    r = length // 2
    k = np.zeros((length, length))
    theta = math.radians(angle_deg)
    # rasterize a segment of full length with supersampled midpoints, nearest pixel
    n = 8 * length
    for t in (np.arange(n) + 0.5) * (length / n) - length / 2.0:
        x = int(round(r + t * math.cos(theta)))
        y = int(round(r - t * math.sin(theta)))
        if 0 <= y < length and 0 <= x < length:
            k[y, x] += 1.0
    return k / k.sum()


def convolve(image, kernel, boundary: str = "symmetric") -> np.ndarray:
    """Convolve an image with an odd-sized kernel; output has the input's shape."""
    img = as_image(image)
    k = check_kernel(kernel)
    if k.shape[0] > img.shape[0] or k.shape[1] > img.shape[1]:
        raise InvalidInputError(f"kernel {k.shape} is larger than image {img.shape}")
    return ndimage.convolve(img, k, mode=_mode(boundary))


def gaussian_blur(image, sigma: float, boundary: str = "symmetric") -> np.ndarray:
    """Separable Gaussian blur over the last two axes.

    Taps are sampled on radius ``ceil(4 sigma)`` and renormalized to sum 1, so
    constants and (for symmetric or periodic boundaries) the image mean are
    preserved.  Leading axes are treated as a stack of independent images.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim < 2:
        raise InvalidInputError(f"expected at least 2 dimensions, got shape {arr.shape}")
    taps = gaussian_taps(sigma)
    mode = _mode(boundary)
    out = ndimage.correlate1d(arr, taps, axis=-1, mode=mode)
    return ndimage.correlate1d(out, taps, axis=-2, mode=mode)


def to_luminance(rgb) -> np.ndarray:
    """ITU-R BT.601 luma of an ``(H, W, 3|4)`` array; alpha is ignored."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise InvalidInputError(f"expected an (H, W, 3) color array, got shape {arr.shape}")
    r, g, b = LUMA_WEIGHTS
    return r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]


STAGES = ("registration", "forward_transform", "weighting", "accumulation", "inverse_transform")


@contextmanager
def timed(timings: dict | None, stage: str):
    """Accumulate wall-clock seconds for ``stage`` into ``timings`` (no-op if None)."""
    if timings is None:
        yield
        return
    t0 = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - t0
