"""FFT services and Fourier-domain burst accumulation (FBA, SFBA)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import InvalidInputError, as_stack, boundary_index, gaussian_taps, timed
from .prox import soft_threshold

log = logging.getLogger(__name__)

# below this the per-bin weight denominator is treated as empty
FALLBACK_DENOMINATOR = 1e-30
IMAG_RESIDUE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralParams:
    """Weight exponent and smoothing width.

    ``sigma=None`` selects the automatic rule ``min(width, height) / 50``;
    ``sigma=0`` disables the Gaussian smoothing of the powered magnitudes.
    """

    p: float = 11.0
    sigma: float | None = None

    def __post_init__(self):
        if not self.p >= 0:
            raise InvalidInputError(f"p must be nonnegative, got {self.p!r}")
        if self.sigma is not None and not self.sigma >= 0:
            raise InvalidInputError(f"sigma must be nonnegative, got {self.sigma!r}")

    def resolve_sigma(self, shape) -> float:
        if self.sigma is None:
            return min(shape[-2], shape[-1]) / 50.0
        return float(self.sigma)


def fft2(image) -> np.ndarray:
    """Unnormalized forward DFT over the last two axes."""
    return np.fft.fft2(np.asarray(image, dtype=np.float64), axes=(-2, -1))


def ifft2(spectrum) -> np.ndarray:
    """Inverse DFT (1/(W*H) normalization) returning the real part.

    A warning is logged when the discarded imaginary part exceeds 1e-10
    relative to the signal scale, i.e. the spectrum was not conjugate-symmetric.
    """
    out = np.fft.ifft2(np.asarray(spectrum), axes=(-2, -1))
    if out.size:
        residue = float(np.max(np.abs(out.imag)))
        scale = max(1.0, float(np.max(np.abs(out.real))))
        if residue > IMAG_RESIDUE_TOL * scale:
            log.warning("discarding imaginary residue %.3g (spectrum not conjugate-symmetric)", residue)
    return np.ascontiguousarray(out.real)


def _log_smooth_axis(logv: np.ndarray, taps: np.ndarray, axis: int, boundary: str) -> np.ndarray:
    """``log(G * exp(logv))`` along one spatial axis of an ``(M, ...)`` stack.

    Each output bin is rescaled by the largest term entering it (over taps and
    frames), a factor common to all frames that cancels in the weight ratio.
    """
    n = logv.shape[axis]
    c = len(taps) // 2
    index = [boundary_index(n, t - c, boundary) for t in range(len(taps))]
    peak = np.full(logv.shape[1:], -np.inf)
    for idx in index:
        peak = np.maximum(peak, np.take(logv, idx, axis=axis).max(axis=0))
    live = np.isfinite(peak)
    shift = np.where(live, peak, 0.0)
    acc = np.zeros_like(logv)
    for tap, idx in zip(taps, index):
        acc += tap * np.exp(np.take(logv, idx, axis=axis) - shift)
    with np.errstate(divide="ignore"):
        return np.where(live, np.log(acc) + shift, -np.inf)


def power_weights(magnitudes: np.ndarray, p: float, sigma: float, boundary: str) -> np.ndarray:
    """Normalized weights ``G(|a_i|^p) / sum_j G(|a_j|^p)`` along axis 0.

    Powers are handled as ``p * log|a|`` and rescaled per bin by the largest
    contributing term, so ``p = 11`` cannot overflow and the result equals
    the plain formula.  Without smoothing this is division by the per-bin
    maximum over frames.  Bins where every contribution is zero get ``1/M``.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    m = mags.shape[0]
    if p == 0:
        return np.full(mags.shape, 1.0 / m)
    with np.errstate(divide="ignore"):
        logv = p * np.log(mags)
    if sigma > 0:
        taps = gaussian_taps(sigma)
        logv = _log_smooth_axis(logv, taps, -1, boundary)
        logv = _log_smooth_axis(logv, taps, -2, boundary)
    top = logv.max(axis=0)
    powered = np.exp(logv - np.where(np.isfinite(top), top, 0.0))
    # fixed frame-index order keeps the reduction deterministic
    denom = powered[0].copy()
    for i in range(1, m):
        denom += powered[i]
    empty = denom < FALLBACK_DENOMINATOR
    weights = powered / np.where(empty, 1.0, denom)
    weights[:, empty] = 1.0 / m
    return weights


def fba_weights(spectra, params: SpectralParams = SpectralParams()) -> np.ndarray:
    """Per-frame, per-bin FBA weights for an ``(M, H, W)`` stack of spectra.

    Smoothing runs on the unshifted frequency plane with periodic wraparound.
    """
    if isinstance(spectra, np.ndarray):
        spec = spectra
    else:
        spectra = list(spectra)
        if not spectra:
            raise InvalidInputError("fba_weights needs at least one spectrum")
        if len({np.shape(s) for s in spectra}) != 1:
            raise InvalidInputError("spectra have mismatched shapes")
        spec = np.stack(spectra)
    if spec.ndim == 2:
        spec = spec[None]
    if spec.ndim != 3 or spec.shape[0] == 0:
        raise InvalidInputError(f"expected an (M, H, W) spectrum stack, got shape {spec.shape}")
    return power_weights(np.abs(spec), params.p, params.resolve_sigma(spec.shape), "periodic")


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    acc = weights[0] * values[0]
    for i in range(1, values.shape[0]):
        acc = acc + weights[i] * values[i]
    return acc


def fba_stack(stack: np.ndarray, params: SpectralParams, timings=None):
    """FBA on an ``(M, H, W)`` float stack; returns ``(image, weights)``."""
    with timed(timings, "forward_transform"):
        spectra = fft2(stack)
    with timed(timings, "weighting"):
        weights = fba_weights(spectra, params)
    with timed(timings, "accumulation"):
        acc = weighted_sum(weights, spectra)
    with timed(timings, "inverse_transform"):
        out = ifft2(acc)
    return out, weights


def fba(burst, params: SpectralParams = SpectralParams(), *, return_weights: bool = False, timings=None):
    """Fourier burst accumulation of a frame sequence.

    Returns the restored image, or ``(image, weights)`` with ``return_weights``.
    """
    stack = as_stack(burst)
    out, weights = fba_stack(stack, params, timings)
    return (out, weights) if return_weights else out


def sfba(
    burst,
    lam: float = 0.5,
    *,
    average: bool = True,
    scale_spectra: bool = False,
    timings=None,
    stats: dict | None = None,
) -> np.ndarray:
    """Sparse Fourier burst accumulation.

    Each spectrum is complex soft-thresholded, the results are summed and
    inverse transformed.  ``average`` divides the sum by M; ``scale_spectra``
    thresholds ``F / sqrt(W*H)`` instead of ``F`` so ``lam`` does not depend
    on resolution.  Disabling both gives the unnormalized sum.
    """
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    stack = as_stack(burst)
    m, h, w = stack.shape
    scale = np.sqrt(h * w) if scale_spectra else 1.0
    with timed(timings, "forward_transform"):
        spectra = fft2(stack) / scale
    with timed(timings, "weighting"):
        shrunk = soft_threshold(spectra, lam)
    with timed(timings, "accumulation"):
        acc = shrunk[0].copy()
        for i in range(1, m):
            acc += shrunk[i]
        if average:
            acc /= m
        acc *= scale
    with timed(timings, "inverse_transform"):
        out = ifft2(acc)
    if stats is not None:
        stats["nonzero_fraction"] = float(np.count_nonzero(shrunk)) / shrunk.size
    return out
