"""Synthetic turbulent bursts with ground truth.

Each frame is ``warp(blur(clean), flow_i) + noise_i``: a blur shared by all
frames (or one kernel per frame), a smooth random backward warp per frame and
white Gaussian noise.  Every random draw is keyed on ``(seed, frame_index)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import InvalidInputError, as_image, check_kernel, convolve, gaussian_blur
from .registration import FlowField, warp_bilinear

PSNR_CAP = 100.0


def bar_chart(
    height: int = 64,
    width: int = 64,
    widths=(6, 5, 4, 3),
    low: float = 0.15,
    high: float = 0.85,
) -> np.ndarray:
    """Resolution-target image: vertical bar triplets of decreasing width
    over the upper two thirds, horizontal triplets below."""
    img = np.full((height, width), low)
    split = (2 * height) // 3

    def triplets(length: int):
        # (start, stop) spans of bars, widths shrinking away from the origin
        spans = []
        pos = 2
        for bw in widths:
            for _ in range(3):
                if pos + bw > length - 2:
                    return spans
                spans.append((pos, pos + bw))
                pos += 2 * bw
            pos += bw + 2
        return spans

    for a, b in triplets(width):
        img[2:split - 2, a:b] = high
    for a, b in triplets(height - split):
        img[split + a:split + b, 2:width - 2] = high
    return img


@dataclass
class DegradationSpec:
    """Parameters of the degradation ``warp(blur(u)) + noise``.

    ``blur`` is ``None`` (no blur), one kernel shared by all frames, or a list
    with one kernel per frame.  ``warp_smoothness`` is the correlation length
    of the displacement field: its autocorrelation is ``exp(-r^2 / (2 l^2))``.
    """

    warp_amplitude: float = 0.0
    warp_smoothness: float = 8.0
    blur: object = None
    noise_sigma: float = 0.0
    seed: int = 0
    order: str = "blur-warp"
    boundary: str = "symmetric"
    # spline order of the resampling used to apply the warps (1 = bilinear)
    interpolation: int = 3

    def __post_init__(self):
        if self.warp_amplitude < 0 or self.warp_smoothness <= 0 or self.noise_sigma < 0:
            raise InvalidInputError("degradation magnitudes must be nonnegative (smoothness positive)")
        if self.order not in ("blur-warp", "warp-blur"):
            raise InvalidInputError(f"order must be 'blur-warp' or 'warp-blur', got {self.order!r}")

    def kernel_for(self, index: int, count: int):
        if self.blur is None:
            return None
        if isinstance(self.blur, (list, tuple)):
            if len(self.blur) != count:
                raise InvalidInputError(f"{len(self.blur)} kernels given for {count} frames")
            return check_kernel(self.blur[index])
        return check_kernel(self.blur)


@dataclass
class GroundTruth:
    flows: list = field(default_factory=list)
    kernels: list = field(default_factory=list)
    noises: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "flows": [{"dx": f.dx.tolist(), "dy": f.dy.tolist()} for f in self.flows],
            "kernels": [None if k is None else np.asarray(k).tolist() for k in self.kernels],
            "noises": None if self.noises is None else self.noises.tolist(),
        }


def _rng(seed: int, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, index, stream])


def random_smooth_warp(width: int, height: int, spec: DegradationSpec, frame_index: int) -> FlowField:
    """Smooth random displacement whose largest vector has length ``warp_amplitude``."""
    if spec.warp_amplitude == 0:
        return FlowField.zeros((height, width))
    noise = _rng(spec.seed, frame_index, 0).standard_normal((2, height, width))
    # Gaussian smoothing of white noise with s gives autocorrelation width s*sqrt(2)
    field_ = gaussian_blur(noise, spec.warp_smoothness / math.sqrt(2.0), boundary="periodic")
    peak = float(np.max(np.hypot(field_[0], field_[1])))
    field_ *= spec.warp_amplitude / peak
    return FlowField(field_[0], field_[1])


def apply_warp(image: np.ndarray, flow: FlowField, order: int = 3) -> np.ndarray:
    """Backward warp with spline interpolation of the given order, edges clamped."""
    if order == 1:
        return warp_bilinear(image, flow)
    yy, xx = np.indices(image.shape, dtype=np.float64)
    coords = np.stack([yy + flow.dy, xx + flow.dx])
    return ndimage.map_coordinates(image, coords, order=order, mode="nearest")


def generate_burst(clean, count: int, spec: DegradationSpec = DegradationSpec()):
    """Return ``(frames, GroundTruth)`` with ``frames`` of shape ``(M, H, W)``."""
    u = as_image(clean, "clean")
    if count < 1:
        raise InvalidInputError(f"frame count must be >= 1, got {count}")
    h, w = u.shape
    frames = np.empty((count, h, w))
    truth = GroundTruth(noises=np.zeros((count, h, w)))

    def blur(img, kernel):
        return img if kernel is None else convolve(img, kernel, spec.boundary)

    def warp(img, flow):
        # spline prefiltering is not exactly the identity, so skip null warps
        return img.copy() if spec.warp_amplitude == 0 else apply_warp(img, flow, spec.interpolation)

    for i in range(count):
        kernel = spec.kernel_for(i, count)
        flow = random_smooth_warp(w, h, spec, i)
        if spec.order == "blur-warp":
            frame = warp(blur(u, kernel), flow)
        else:
            frame = blur(warp(u, flow), kernel)
        if spec.noise_sigma > 0:
            truth.noises[i] = _rng(spec.seed, i, 1).normal(0.0, spec.noise_sigma, (h, w))
            frame = frame + truth.noises[i]
        frames[i] = frame
        truth.flows.append(flow)
        truth.kernels.append(kernel)
    return frames, truth


def psnr(a, b) -> float:
    """PSNR in dB for ``[0, 1]`` images, capped at 100 dB (identical images)."""
    x = as_image(a, "a")
    y = as_image(b, "b")
    if x.shape != y.shape:
        raise InvalidInputError(f"shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def save_burst(directory, frames, truth: GroundTruth | None = None) -> list:
    """Write frames as ``frame_001.png`` ... plus ``truth.json``; returns paths."""
    from .image_io import save_image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames, start=1):
        path = directory / f"frame_{i:03d}.png"
        save_image(frame, path)
        paths.append(path)
    if truth is not None:
        (directory / "truth.json").write_text(json.dumps(truth.to_json()))
    return paths
