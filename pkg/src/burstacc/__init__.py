"""Burst accumulation for turbulence-degraded image sequences.

Fourier and framelet-domain weighted accumulation (FBA, Fr-WWBA, Fr-WWFBA),
sparse accumulation (SFBA, Fr-SWBA), non-rigid registration, and numerical
checks of the equivalent-kernel characterizations.
"""

from .core import (
    BurstError,
    InvalidInputError,
    EmptySequenceError,
    UnsupportedVariantError,
    convolve,
    gaussian_blur,
    gaussian_kernel,
)
from .fourier import SpectralParams, fba, fba_weights, fft2, ifft2, sfba
from .wavelet import FilterBank, SubbandSet, analyze, build_framelet_bank, synthesize
from .registration import FlowField, FlowOptions, average_frame, lk_flow, register_sequence, warp_bilinear
from .accumulation import BurstConfig, RunReport, run_method, soft_threshold, swba, wwba, wwfba
from .analysis import EquivalenceReport, equivalent_kernel_fba, equivalent_kernel_wwfba, verify_noise_term
from .synth import DegradationSpec, bar_chart, generate_burst, psnr

__version__ = "0.1.0"

__all__ = [
    "BurstError",
    "InvalidInputError",
    "EmptySequenceError",
    "UnsupportedVariantError",
    "convolve",
    "gaussian_blur",
    "gaussian_kernel",
    "SpectralParams",
    "fba",
    "fba_weights",
    "fft2",
    "ifft2",
    "sfba",
    "FilterBank",
    "SubbandSet",
    "analyze",
    "build_framelet_bank",
    "synthesize",
    "FlowField",
    "FlowOptions",
    "average_frame",
    "lk_flow",
    "register_sequence",
    "warp_bilinear",
    "BurstConfig",
    "RunReport",
    "run_method",
    "soft_threshold",
    "swba",
    "wwba",
    "wwfba",
    "EquivalenceReport",
    "equivalent_kernel_fba",
    "equivalent_kernel_wwfba",
    "verify_noise_term",
    "DegradationSpec",
    "bar_chart",
    "generate_burst",
    "psnr",
]
