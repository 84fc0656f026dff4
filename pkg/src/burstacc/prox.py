"""Pointwise soft-thresholding, the proximal map of the L1 norm."""

from __future__ import annotations

import numpy as np

from .core import InvalidInputError


def soft_threshold(value, lam: float):
    """Shrink magnitudes by ``lam`` with floor 0, keeping sign or phase.

    Works on real or complex scalars and arrays; ``0`` maps to ``0``.
    """
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    arr = np.asarray(value)
    if not (np.issubdtype(arr.dtype, np.complexfloating) or np.issubdtype(arr.dtype, np.floating)):
        arr = arr.astype(np.float64)
    mag = np.abs(arr)
    shrunk = np.maximum(mag - lam, 0.0)
    gain = np.divide(shrunk, mag, out=np.zeros_like(mag), where=mag > 0)
    out = arr * gain
    if np.ndim(value) == 0:
        return out.item()
    return out
