"""Framelet-domain accumulation and method dispatch.

Methods: FBA, Fr-WWBA, Fr-WWFBA, SFBA, Fr-SWBA.  The curvelet variants
(C-WWBA, C-WWFBA, C-SWBA) are recognised names that raise
:class:`UnsupportedVariantError`.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import STAGES, InvalidInputError, UnsupportedVariantError, as_stack, timed
from .fourier import SpectralParams, fba_stack, power_weights, sfba, weighted_sum
from .prox import soft_threshold
from .registration import FlowOptions, register_sequence
from .wavelet import FilterBank, analyze, build_framelet_bank, synthesize

METHODS = ("fba", "fr-wwba", "fr-wwfba", "sfba", "fr-swba")
UNSUPPORTED = ("c-wwba", "c-wwfba", "c-swba")
SPARSE_METHODS = ("sfba", "fr-swba")
DEFAULT_LAMBDA = {"sfba": 0.5, "fr-swba": 0.001}
DEFAULT_LEVELS = 4

__all__ = [
    "BurstConfig",
    "RunReport",
    "METHODS",
    "run_method",
    "soft_threshold",
    "swba",
    "wwba",
    "wwfba",
]


def _spatial_boundary(boundary: str) -> str:
    if boundary not in ("symmetric", "periodic"):
        raise InvalidInputError(f"boundary must be 'symmetric' or 'periodic', got {boundary!r}")
    return boundary


def wwba(
    burst,
    bank: FilterBank | None = None,
    levels: int = DEFAULT_LEVELS,
    params: SpectralParams = SpectralParams(),
    *,
    boundary: str = "symmetric",
    return_weights: bool = False,
    timings=None,
):
    """Weighted wavelet burst accumulation.

    Weights are computed pointwise from the subband coefficients of each
    frame (smoothed spatially within the subband) and the weighted per-band
    sums are synthesized.  ``return_weights`` adds an ``(N, M, H, W)`` array.
    """
    bank = bank or build_framelet_bank()
    boundary = _spatial_boundary(boundary)
    stack = as_stack(burst)
    sigma = params.resolve_sigma(stack.shape)
    with timed(timings, "forward_transform"):
        coeffs = analyze(stack, bank, levels, boundary)
    data = coeffs.data
    nbands = data.shape[1]
    merged = np.empty(data.shape[1:])
    weights = np.empty((nbands,) + data.shape[:1] + data.shape[2:]) if return_weights else None
    for n in range(nbands):
        band = data[:, n]
        with timed(timings, "weighting"):
            w = power_weights(np.abs(band), params.p, sigma, boundary)
        with timed(timings, "accumulation"):
            merged[n] = weighted_sum(w, band)
        if weights is not None:
            weights[n] = w
    with timed(timings, "inverse_transform"):
        out = synthesize(coeffs.with_data(merged), bank)
    return (out, weights) if return_weights else out


def wwfba(
    burst,
    bank: FilterBank | None = None,
    levels: int = DEFAULT_LEVELS,
    params: SpectralParams = SpectralParams(),
    *,
    boundary: str = "symmetric",
    return_weights: bool = False,
    timings=None,
):
    """Framelet analysis, an independent FBA per subband sequence, synthesis.

    ``return_weights`` adds the per-band Fourier weights, shape ``(N, M, H, W)``.
    """
    bank = bank or build_framelet_bank()
    boundary = _spatial_boundary(boundary)
    stack = as_stack(burst)
    with timed(timings, "forward_transform"):
        coeffs = analyze(stack, bank, levels, boundary)
    data = coeffs.data
    nbands = data.shape[1]
    merged = np.empty(data.shape[1:])
    weights = np.empty((nbands,) + data.shape[:1] + data.shape[2:]) if return_weights else None
    for n in range(nbands):
        merged[n], w = fba_stack(data[:, n], params, timings)
        if weights is not None:
            weights[n] = w
    with timed(timings, "inverse_transform"):
        out = synthesize(coeffs.with_data(merged), bank)
    return (out, weights) if return_weights else out


def swba(
    burst,
    bank: FilterBank | None = None,
    levels: int = DEFAULT_LEVELS,
    lam: float = DEFAULT_LAMBDA["fr-swba"],
    *,
    average: bool = True,
    threshold_lowpass: bool = False,
    boundary: str = "symmetric",
    timings=None,
    stats: dict | None = None,
) -> np.ndarray:
    """Sparse wavelet burst accumulation.

    Detail coefficients of every frame are soft-thresholded, then all bands
    are summed over frames (divided by M when ``average``) and synthesized.
    The lowpass band is only averaged unless ``threshold_lowpass`` is set.
    ``stats['nonzero_fraction']`` receives the share of surviving thresholded
    coefficients.
    """
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    bank = bank or build_framelet_bank()
    boundary = _spatial_boundary(boundary)
    stack = as_stack(burst)
    m = stack.shape[0]
    with timed(timings, "forward_transform"):
        coeffs = analyze(stack, bank, levels, boundary)
    data = coeffs.data
    with timed(timings, "weighting"):
        shrunk = data.copy()
        last = data.shape[1] if threshold_lowpass else data.shape[1] - 1
        shrunk[:, :last] = soft_threshold(data[:, :last], lam)
    with timed(timings, "accumulation"):
        merged = shrunk[0].copy()
        for i in range(1, m):
            merged += shrunk[i]
        if average:
            merged /= m
    with timed(timings, "inverse_transform"):
        out = synthesize(coeffs.with_data(merged), bank)
    if stats is not None:
        thresholded = shrunk[:, :last]
        stats["nonzero_fraction"] = float(np.count_nonzero(thresholded)) / max(thresholded.size, 1)
    return out


def canonical_method(name: str) -> str:
    key = name.strip().lower().replace("_", "-")
    if key in UNSUPPORTED:
        raise UnsupportedVariantError(
            f"unsupported variant {name!r}: curvelet-based methods are not implemented "
            f"(supported: {', '.join(METHODS)})"
        )
    if key not in METHODS:
        raise InvalidInputError(f"unknown method {name!r} (supported: {', '.join(METHODS)})")
    return key


@dataclass
class BurstConfig:
    """Method selector and tunables.

    ``lam=None`` picks the per-method default (0.5 for SFBA, 0.001 for
    Fr-SWBA), ``sigma=None`` the automatic ``min(w, h) / 50`` rule.
    ``literal_sba`` disables the 1/M averaging of the sparse methods;
    ``scale_spectra`` makes SFBA threshold ``F / sqrt(W*H)`` instead of the
    raw DFT.
    """

    method: str = "fba"
    p: float = 11.0
    lam: float | None = None
    sigma: float | None = None
    levels: int = DEFAULT_LEVELS
    registration: str = "none"
    register_iters: int = 1
    literal_sba: bool = False
    scale_spectra: bool = False
    threshold_lowpass: bool = False
    boundary: str = "symmetric"
    flow: FlowOptions = field(default_factory=FlowOptions)

    def __post_init__(self):
        self.method = canonical_method(self.method)
        if self.registration not in ("none", "nonrigid"):
            raise InvalidInputError(f"registration must be 'none' or 'nonrigid', got {self.registration!r}")
        if self.register_iters < 1:
            raise InvalidInputError("register_iters must be >= 1")
        if self.lam is None:
            self.lam = DEFAULT_LAMBDA.get(self.method)
        _spatial_boundary(self.boundary)

    @property
    def spectral(self) -> SpectralParams:
        return SpectralParams(p=self.p, sigma=self.sigma)

    def describe(self) -> dict:
        d = asdict(self)
        if self.method not in SPARSE_METHODS:
            d.pop("lam")
            d.pop("literal_sba")
            d.pop("scale_spectra")
            d.pop("threshold_lowpass")
        else:
            d.pop("p")
            d.pop("sigma")
        if self.method in ("fba", "sfba"):
            d.pop("levels")
            d.pop("threshold_lowpass", None)
        if self.method != "sfba":
            d.pop("scale_spectra", None)
        if self.registration == "none":
            d.pop("flow")
            d.pop("register_iters")
        return d


@dataclass
class RunReport:
    method: str
    parameters: dict
    stages: dict
    total_seconds: float
    psnr: float | None = None
    nonzero_fraction: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def run_method(burst, config: BurstConfig, ground_truth=None):
    """Optional registration followed by the configured accumulation.

    Returns ``(image, RunReport)``.
    """
    from .synth import psnr  # synth depends on registration; import lazily

    t0 = time.perf_counter()
    stages = {name: 0.0 for name in STAGES}
    stack = as_stack(burst)
    if config.registration == "nonrigid":
        with timed(stages, "registration"):
            stack = register_sequence(stack, config.register_iters, config.flow)
    bank = build_framelet_bank()
    stats = {}
    m = config.method
    if m == "fba":
        out, _ = fba_stack(stack, config.spectral, stages)
    elif m == "fr-wwba":
        out = wwba(stack, bank, config.levels, config.spectral, boundary=config.boundary, timings=stages)
    elif m == "fr-wwfba":
        out = wwfba(stack, bank, config.levels, config.spectral, boundary=config.boundary, timings=stages)
    elif m == "sfba":
        out = sfba(
            stack,
            config.lam,
            average=not config.literal_sba,
            scale_spectra=config.scale_spectra,
            timings=stages,
            stats=stats,
        )
    else:
        out = swba(
            stack,
            bank,
            config.levels,
            config.lam,
            average=not config.literal_sba,
            threshold_lowpass=config.threshold_lowpass,
            boundary=config.boundary,
            timings=stages,
            stats=stats,
        )
    total = time.perf_counter() - t0
    report = RunReport(
        method=m,
        parameters=config.describe(),
        stages=stages,
        total_seconds=total,
        psnr=psnr(out, ground_truth) if ground_truth is not None else None,
        nonzero_fraction=stats.get("nonzero_fraction"),
    )
    return out, report
