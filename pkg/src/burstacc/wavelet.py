"""Undecimated tight-frame framelet transform (a trous filter bank).

Analysis convolves with the time-reversed filters, synthesis with the filters
themselves, and no level is downsampled, so every subband has the image's
size and the transform commutes with integer shifts (in periodic mode).

With the symmetric boundary each subband is extended with the symmetry it
inherits from its filters (half-sample symmetric for the even filters,
half-sample antisymmetric for the odd one).  Under that convention the
bank is exactly tight on the bounded domain: reconstruction is exact and
subband energy sums to the image energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError

BOUNDARIES = ("symmetric", "periodic")


@dataclass(frozen=True)
class FilterBank:
    """Centered odd-length 1-D filters; index 0 is the lowpass."""

    synthesis_filters: tuple
    frame_constant: float = 1.0

    @property
    def analysis_filters(self) -> tuple:
        return tuple(h[::-1].copy() for h in self.synthesis_filters)

    @property
    def size(self) -> int:
        return len(self.synthesis_filters)

    @property
    def max_length(self) -> int:
        return max(len(h) for h in self.synthesis_filters)

    @property
    def parities(self) -> tuple:
        """+1 for symmetric filters, -1 for antisymmetric ones."""
        out = []
        for h in self.synthesis_filters:
            if np.allclose(h, h[::-1]):
                out.append(1)
            elif np.allclose(h, -h[::-1]):
                out.append(-1)
            else:
                raise InvalidInputError("filters must be symmetric or antisymmetric")
        return tuple(out)

    def frequency_response(self, n: int, dilation: int = 1) -> np.ndarray:
        """DFT (length ``n``) of each dilated synthesis filter, center at index 0."""
        omega = 2 * np.pi * np.fft.fftfreq(n)
        resp = []
        for h in self.synthesis_filters:
            c = len(h) // 2
            k = (np.arange(len(h)) - c) * dilation
            resp.append(np.exp(-1j * np.outer(omega, k)) @ h)
        return np.array(resp)


def build_framelet_bank(check_points: int = 1024) -> FilterBank:
    """Piecewise-linear B-spline tight framelet bank.

    The tight-frame identity ``sum_n |h_n(w)|^2 = 1`` is checked on a
    ``check_points`` frequency grid.
    """
    s = np.sqrt(2.0) / 4.0
    bank = FilterBank(
        synthesis_filters=(
            np.array([1.0, 2.0, 1.0]) / 4.0,
            np.array([s, 0.0, -s]),
            np.array([-1.0, 2.0, -1.0]) / 4.0,
        )
    )
    total = np.sum(np.abs(bank.frequency_response(check_points)) ** 2, axis=0)
    if np.max(np.abs(total - bank.frame_constant)) > 1e-12:
        raise RuntimeError("framelet bank failed the tight-frame identity")
    return bank


@dataclass
class SubbandSet:
    """Stacked subbands, shape ``(..., N, H, W)`` with the lowpass last.

    ``level_map[n]`` is ``(level, (row_filter, col_filter))``; detail bands of
    level 1 come first, then level 2 and so on, then the level-J lowpass.
    """

    data: np.ndarray
    levels: int
    level_map: list = field(default_factory=list)
    boundary: str = "symmetric"

    @property
    def details(self) -> np.ndarray:
        return self.data[..., :-1, :, :]

    @property
    def lowpass(self) -> np.ndarray:
        return self.data[..., -1, :, :]

    @property
    def count(self) -> int:
        return self.data.shape[-3]

    def with_data(self, data: np.ndarray) -> "SubbandSet":
        return SubbandSet(np.asarray(data), self.levels, list(self.level_map), self.boundary)


def _orientations(nfilters: int):
    return [(a, b) for a in range(nfilters) for b in range(nfilters) if (a, b) != (0, 0)]


def level_map_for(bank: FilterBank, levels: int) -> list:
    lm = [(j, ab) for j in range(1, levels + 1) for ab in _orientations(bank.size)]
    lm.append((levels, (0, 0)))
    return lm


def _extension_index(n: int, pad: int, boundary: str, parity: int):
    pos = np.arange(-pad, n + pad)
    if boundary == "periodic":
        return np.mod(pos, n), np.ones(pos.shape)
    k = np.mod(pos, 2 * n)
    mirrored = k >= n
    src = np.where(mirrored, 2 * n - 1 - k, k)
    sign = np.where(mirrored, float(parity), 1.0)
    return src, sign


def _convolve_axis(x: np.ndarray, taps: np.ndarray, dilation: int, axis: int, parity: int, boundary: str):
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    c = len(taps) // 2
    pad = c * dilation
    src, sign = _extension_index(n, pad, boundary, parity)
    ext = x[..., src] * sign
    out = np.zeros_like(x)
    for t, tap in enumerate(taps):
        if tap == 0.0:
            continue
        start = pad - (t - c) * dilation
        out += tap * ext[..., start:start + n]
    return np.moveaxis(out, -1, axis)


def check_levels(shape, bank: FilterBank, levels: int) -> None:
    if levels < 1:
        raise InvalidInputError(f"levels must be >= 1, got {levels}")
    span = 2 ** (levels - 1) * (bank.max_length - 1)
    if span > min(shape[-2], shape[-1]):
        raise InvalidInputError(
            f"{levels} levels need min(width, height) >= 2^(J-1)*(L-1) = {span}, got shape {shape[-2:]}"
        )


def analyze(image, bank: FilterBank | None = None, levels: int = 4, boundary: str = "symmetric") -> SubbandSet:
    """Multi-level undecimated analysis over the last two axes."""
    bank = bank or build_framelet_bank()
    if boundary not in BOUNDARIES:
        raise InvalidInputError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    low = np.asarray(image, dtype=np.float64)
    if low.ndim < 2:
        raise InvalidInputError(f"expected at least 2 dimensions, got shape {low.shape}")
    check_levels(low.shape, bank, levels)
    filters = bank.analysis_filters
    bands = []
    for j in range(1, levels + 1):
        d = 2 ** (j - 1)
        cols = [_convolve_axis(low, f, d, -1, 1, boundary) for f in filters]
        level = {}
        for a, fa in enumerate(filters):
            for b in range(bank.size):
                level[a, b] = _convolve_axis(cols[b], fa, d, -2, 1, boundary)
        bands.extend(level[ab] for ab in _orientations(bank.size))
        low = level[0, 0]
    bands.append(low)
    return SubbandSet(np.stack(bands, axis=-3), levels, level_map_for(bank, levels), boundary)


def synthesize(subbands: SubbandSet, bank: FilterBank | None = None) -> np.ndarray:
    """Inverse of :func:`analyze` (adjoint filter bank)."""
    bank = bank or build_framelet_bank()
    levels = subbands.levels
    orient = _orientations(bank.size)
    per_level = len(orient)
    data = np.asarray(subbands.data, dtype=np.float64)
    if data.ndim < 3 or data.shape[-3] != levels * per_level + 1:
        raise InvalidInputError(
            f"expected {levels * per_level + 1} subbands for {levels} levels, got shape {data.shape}"
        )
    check_levels(data.shape, bank, levels)
    filters = bank.synthesis_filters
    par = bank.parities
    boundary = subbands.boundary
    low = data[..., -1, :, :]
    for j in range(levels, 0, -1):
        d = 2 ** (j - 1)
        first = (j - 1) * per_level
        band = {(0, 0): low}
        for k, ab in enumerate(orient):
            band[ab] = data[..., first + k, :, :]
        acc = None
        for b in range(bank.size):
            rows = None
            for a in range(bank.size):
                term = _convolve_axis(band[a, b], filters[a], d, -2, par[a], boundary)
                rows = term if rows is None else rows + term
            term = _convolve_axis(rows, filters[b], d, -1, par[b], boundary)
            acc = term if acc is None else acc + term
        low = acc
    return low
