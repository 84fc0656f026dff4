"""Non-rigid burst stabilization.

Every frame is aligned onto the temporal average with a dense coarse-to-fine
Lucas-Kanade flow and bilinear backward warping.  The flow is estimated in the
backward (sampling) direction directly, so no deformation has to be inverted.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import InvalidInputError, as_image, as_stack, gaussian_blur

log = logging.getLogger(__name__)


@dataclass
class FlowField:
    """Backward displacement: output pixel ``(x, y)`` samples ``(x + dx, y + dy)``."""

    dx: np.ndarray
    dy: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "FlowField":
        return cls(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.dx.shape

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)


@dataclass(frozen=True)
class FlowOptions:
    window: int = 11
    pyramid_levels: int = 3
    iterations: int = 3
    min_eigenvalue: float = 1e-6
    # Tikhonov weight per window pixel pulling each update toward the current flow
    damping: float = 1e-3
    # displacement cap as a fraction of min(width, height)
    max_fraction: float = 0.25

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise InvalidInputError(f"window must be a positive odd integer, got {self.window}")
        if self.pyramid_levels < 1 or self.iterations < 1:
            raise InvalidInputError("pyramid_levels and iterations must be >= 1")
        if self.damping < 0 or self.min_eigenvalue < 0:
            raise InvalidInputError("damping and min_eigenvalue must be nonnegative")


def worker_count() -> int:
    env = os.environ.get("BURSTACC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BURSTACC_THREADS=%r", env)
    return os.cpu_count() or 1


def bilinear_sample(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample ``image[y, x]`` bilinearly; coordinates are clamped to the domain."""
    h, w = image.shape
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.minimum(np.floor(x).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = image[y0, x0] * (1 - fx) + image[y0, x1] * fx
    bottom = image[y1, x0] * (1 - fx) + image[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def warp_bilinear(image, flow: FlowField) -> np.ndarray:
    """Backward warp: ``out(x, y) = image(x + dx, y + dy)`` with edge clamping."""
    img = as_image(image)
    if flow.shape != img.shape:
        raise InvalidInputError(f"flow shape {flow.shape} does not match image {img.shape}")
    yy, xx = np.indices(img.shape, dtype=np.float64)
    return bilinear_sample(img, xx + flow.dx, yy + flow.dy)


def average_frame(burst) -> np.ndarray:
    """Pixel-wise temporal mean, reduced in frame order."""
    stack = as_stack(burst)
    acc = stack[0].copy()
    for frame in stack[1:]:
        acc += frame
    return acc / stack.shape[0]


def _pyramid(image: np.ndarray, levels: int) -> list:
    pyr = [image]
    for _ in range(1, levels):
        pyr.append(gaussian_blur(pyr[-1], 1.0)[::2, ::2])
    return pyr


def _upsample_flow(flow: FlowField, shape) -> FlowField:
    yy, xx = np.indices(shape, dtype=np.float64)
    # fine pixel k sits at coarse coordinate k / 2 (coarse grid = even fine pixels)
    dx = 2.0 * bilinear_sample(flow.dx, xx / 2.0, yy / 2.0)
    dy = 2.0 * bilinear_sample(flow.dy, xx / 2.0, yy / 2.0)
    return FlowField(dx, dy)


def _lk_level(ref: np.ndarray, mov: np.ndarray, flow: FlowField, opts: FlowOptions) -> FlowField:
    # Each pixel solves for a window-constant displacement.  Residuals at
    # neighbours were warped with their own flow, so they are re-linearized to
    # the centre pixel's flow: it(x') + g(x')^T (f(x) - f(x')).  The damping
    # term keeps directions along edges (aperture problem) near the current
    # estimate instead of letting noise drive them.
    area = float(opts.window**2)

    def box(a):
        return area * ndimage.uniform_filter(a, opts.window, mode="reflect")

    gy, gx = np.gradient(ref)
    sxx, syy, sxy = box(gx * gx), box(gy * gy), box(gx * gy)
    half_gap = np.sqrt(np.maximum((sxx - syy) ** 2 + 4 * sxy * sxy, 0.0))
    ok = 0.5 * (sxx + syy - half_gap) >= opts.min_eigenvalue
    damp = opts.damping * area
    axx, ayy = sxx + damp, syy + damp
    det = axx * ayy - sxy * sxy
    safe = np.where(ok & (det > 0), det, 1.0)
    ok &= det > 0
    for _ in range(opts.iterations):
        it = warp_bilinear(mov, flow) - ref
        proj = gx * flow.dx + gy * flow.dy - it
        cx = box(gx * proj) + damp * flow.dx
        cy = box(gy * proj) + damp * flow.dy
        dx = np.where(ok, (ayy * cx - sxy * cy) / safe, flow.dx)
        dy = np.where(ok, (axx * cy - sxy * cx) / safe, flow.dy)
        flow = FlowField(dx, dy)
    return flow


def lk_flow(reference, moving, opts: FlowOptions = FlowOptions()) -> FlowField:
    """Dense pyramidal Lucas-Kanade flow from ``reference`` toward ``moving``.

    The result is a backward flow: ``warp_bilinear(moving, flow)`` approximates
    ``reference``.
    """
    ref = as_image(reference, "reference")
    mov = as_image(moving, "moving")
    if ref.shape != mov.shape:
        raise InvalidInputError(f"reference {ref.shape} and moving {mov.shape} differ in shape")
    need = 2 ** (opts.pyramid_levels - 1) * opts.window
    if min(ref.shape) < need:
        raise InvalidInputError(
            f"image {ref.shape} too small for {opts.pyramid_levels} pyramid levels "
            f"with window {opts.window} (need min dimension >= {need})"
        )
    ref_pyr = _pyramid(ref, opts.pyramid_levels)
    mov_pyr = _pyramid(mov, opts.pyramid_levels)
    flow = FlowField.zeros(ref_pyr[-1].shape)
    for level in range(opts.pyramid_levels - 1, -1, -1):
        if flow.shape != ref_pyr[level].shape:
            flow = _upsample_flow(flow, ref_pyr[level].shape)
        flow = _lk_level(ref_pyr[level], mov_pyr[level], flow, opts)
    cap = opts.max_fraction * min(ref.shape)
    mag = flow.magnitude()
    scale = np.where(mag > cap, cap / np.maximum(mag, 1e-300), 1.0)
    return FlowField(np.nan_to_num(flow.dx * scale), np.nan_to_num(flow.dy * scale))


def register_sequence(burst, iterations: int = 1, opts: FlowOptions = FlowOptions(), workers: int | None = None):
    """Warp every frame onto the geometry of the burst average.

    With ``iterations > 1`` the average is recomputed from the registered
    frames and the registration repeated.  Returns an ``(M, H, W)`` stack.
    """
    if iterations < 1:
        raise InvalidInputError(f"iterations must be >= 1, got {iterations}")
    stack = as_stack(burst)
    if stack.shape[0] == 1:
        return stack.copy()
    workers = workers or worker_count()
    for _ in range(iterations):
        ref = average_frame(stack)

        def align(frame):
            return warp_bilinear(frame, lk_flow(ref, frame, opts))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                stack = np.stack(list(pool.map(align, stack)))
        else:
            stack = np.stack([align(f) for f in stack])
    return stack
