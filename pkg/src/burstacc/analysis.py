"""Equivalent-kernel construction and verification for FBA and Fr-WWFBA.

In periodic mode both methods are linear in the frames once their weights are
fixed, so the restored image is ``k_e * u + n_bar``:

* FBA:      ``F(k_e) = sum_i w_i F(k_i)``
* Fr-WWFBA: ``F(k_e) = sum_n |F(psi_n)|^2 sum_i w_i^n F(k_i)``

where ``psi_n`` is the composite (cascaded, dilated) filter of subband ``n``.
The kernel side is evaluated from filter frequency responses, independently
of the spatial filter-bank code it checks.  Weights are taken from the
pipeline run itself.

Kernels at frame size are stored with their center at pixel ``(0, 0)`` and
periodic wraparound; :func:`centered_kernel` shifts one back for display.
"""

from __future__ import annotations

import fnmatch
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .accumulation import wwba, wwfba
from .core import InvalidInputError, as_stack, check_kernel, gaussian_kernel, motion_kernel
from .fourier import SpectralParams, fba, fft2, ifft2
from .wavelet import FilterBank, build_framelet_bank, check_levels, level_map_for

__all__ = [
    "EquivalenceReport",
    "apply_kernel",
    "build_matrix",
    "centered_kernel",
    "embed_kernel",
    "equivalent_kernel_fba",
    "equivalent_kernel_wwfba",
    "relative_l2",
    "run_cases",
    "subband_responses",
    "verify_noise_term",
    "witness_burst",
]

TOLERANCE = 1e-6
# WWBA must differ from every kernel form by more than this on the witness
SEPARATION = 1e-3


def relative_l2(a, b) -> float:
    """``||a - b|| / ||b||`` (absolute norm when ``b`` is zero)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ref = float(np.linalg.norm(b))
    err = float(np.linalg.norm(a - b))
    return err / ref if ref > 0 else err


def embed_kernel(kernel, shape) -> np.ndarray:
    """Zero-pad an odd kernel to ``shape`` with its center moved to ``(0, 0)``."""
    k = check_kernel(kernel)
    h, w = shape
    if k.shape[0] > h or k.shape[1] > w:
        raise InvalidInputError(f"kernel {k.shape} larger than frame {tuple(shape)}")
    out = np.zeros((h, w))
    out[: k.shape[0], : k.shape[1]] = k
    return np.roll(out, (-(k.shape[0] // 2), -(k.shape[1] // 2)), axis=(0, 1))


def centered_kernel(kernel: np.ndarray) -> np.ndarray:
    """Origin-centered frame-size kernel shifted so its center is in the middle."""
    return np.fft.fftshift(kernel)


def apply_kernel(image, kernel_full: np.ndarray) -> np.ndarray:
    """Periodic convolution with a frame-size, origin-centered kernel."""
    return ifft2(fft2(image) * fft2(kernel_full))


def _kernel_spectra(kernels, shape) -> np.ndarray:
    kernels = list(kernels)
    return np.stack([fft2(embed_kernel(k, shape)) for k in kernels])


def _check_weights(weights, m: int, shape, what: str) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape[-3] != m:
        raise InvalidInputError(f"{m} kernels/noises but {w.shape[-3]} {what}")
    if w.shape[-2:] != tuple(shape):
        raise InvalidInputError(f"{what} shape {w.shape[-2:]} does not match frames {tuple(shape)}")
    return w


def equivalent_kernel_fba(kernels, weights) -> np.ndarray:
    """Spatial ``k_e`` of an FBA run, frame-size and origin-centered.

    ``weights`` is the ``(M, H, W)`` per-bin weight field of the run.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 3:
        raise InvalidInputError(f"expected (M, H, W) weights, got shape {weights.shape}")
    kernels = list(kernels)
    shape = weights.shape[-2:]
    w = _check_weights(weights, len(kernels), shape, "weight fields")
    spectra = _kernel_spectra(kernels, shape)
    return ifft2(np.sum(w * spectra, axis=0))


def subband_responses(bank: FilterBank, levels: int, shape) -> np.ndarray:
    """Frequency responses ``(N, H, W)`` of the composite subband filters.

    Band order matches the transform's stacking (level-1 details first,
    lowpass last); row filters act along the first axis.
    """
    h, w = shape
    check_levels(shape, bank, levels)
    rows = [bank.frequency_response(h, 2 ** (j - 1)) for j in range(1, levels + 1)]
    cols = [bank.frequency_response(w, 2 ** (j - 1)) for j in range(1, levels + 1)]
    out = []
    for j, (a, b) in level_map_for(bank, levels):
        # lowpass cascade of the coarser levels, then this level's filters
        ry = np.prod([rows[l][0] for l in range(j - 1)], axis=0) if j > 1 else np.ones(h)
        rx = np.prod([cols[l][0] for l in range(j - 1)], axis=0) if j > 1 else np.ones(w)
        out.append(np.outer(ry * rows[j - 1][a], rx * cols[j - 1][b]))
    return np.stack(out)


def _subband_gain(subband_weights, bank, levels, m: int, shape) -> tuple:
    resp = subband_responses(bank, levels, shape)
    w = np.asarray(subband_weights, dtype=np.float64)
    if w.ndim != 4 or w.shape[0] != resp.shape[0]:
        raise InvalidInputError(
            f"expected ({resp.shape[0]}, M, H, W) subband weights for {levels} levels, got shape {w.shape}"
        )
    w = _check_weights(w, m, shape, "weight fields per subband")
    # sum_n |psi_n|^2 w_i^n  -> effective per-frame frequency gain, (M, H, W)
    return np.einsum("nhw,nmhw->mhw", np.abs(resp) ** 2, w)


def equivalent_kernel_wwfba(kernels, subband_weights, bank: FilterBank | None = None, levels: int = 1) -> np.ndarray:
    """Spatial ``k_e`` of a periodic Fr-WWFBA run, frame-size and origin-centered.

    ``subband_weights`` has shape ``(N, M, H, W)`` as returned by
    ``wwfba(..., return_weights=True)``.
    """
    bank = bank or build_framelet_bank()
    kernels = list(kernels)
    shape = np.shape(subband_weights)[-2:]
    gain = _subband_gain(subband_weights, bank, levels, len(kernels), shape)
    spectra = _kernel_spectra(kernels, shape)
    return ifft2(np.sum(gain * spectra, axis=0))


def verify_noise_term(noises, weights, mode: str = "fba", bank: FilterBank | None = None, levels: int = 1):
    """Averaged noise ``n_bar`` for FBA (``weights`` per bin) or Fr-WWFBA
    (``weights`` per subband and bin)."""
    stack = as_stack(noises, "noises")
    m, h, w = stack.shape
    spectra = fft2(stack)
    if mode == "fba":
        gain = _check_weights(weights, m, (h, w), "weight fields")
    elif mode == "wwfba":
        gain = _subband_gain(weights, bank or build_framelet_bank(), levels, m, (h, w))
    else:
        raise InvalidInputError(f"mode must be 'fba' or 'wwfba', got {mode!r}")
    return ifft2(np.sum(gain * spectra, axis=0))


@dataclass
class EquivalenceReport:
    """Outcome of one verification case.  ``relative_l2_error`` is ``None``
    for the registration and PSNR cases, whose measurement is in ``detail``."""

    case: str
    mode: str
    relative_l2_error: float | None
    tolerance_passed: bool
    kernel: np.ndarray | None = None
    noise_term: np.ndarray | None = None
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_json_line(self) -> str:
        rec = {
            "case": self.case,
            "mode": self.mode,
            "rel_l2": self.relative_l2_error,
            "passed": bool(self.tolerance_passed),
        }
        rec.update(self.detail)
        return json.dumps(rec)


# -- test matrix ---------------------------------------------------------


def _frame_kernels(kind: str, m: int, rng: np.random.Generator) -> list:
    if kind == "gaussian":
        return [gaussian_kernel(s) for s in rng.uniform(0.5, 2.0, m)]
    if kind == "motion":
        lengths = rng.choice([3, 5, 7, 9], m)
        angles = rng.uniform(0.0, 180.0, m)
        return [motion_kernel(int(n), float(a)) for n, a in zip(lengths, angles)]
    raise InvalidInputError(f"unknown kernel family {kind!r}")


def synthetic_case(size, m: int, kind: str = "gaussian", noise: float = 0.0, seed: int = 0):
    """Noiseless or noisy periodic burst ``k_i * u + n_i`` with a random scene.

    Returns ``(frames, clean, kernels, noises)``.
    """
    from .core import convolve

    h, w = (size, size) if np.isscalar(size) else size
    rng = np.random.default_rng([seed, m, h, w])
    # random scene with a natural-ish spectrum: white noise lightly blurred
    u = convolve(rng.uniform(0.0, 1.0, (h, w)), gaussian_kernel(0.7), "periodic")
    kernels = _frame_kernels(kind, m, rng)
    noises = rng.normal(0.0, noise, (m, h, w)) if noise > 0 else np.zeros((m, h, w))
    frames = np.stack([convolve(u, k, "periodic") for k in kernels]) + noises
    return frames, u, kernels, noises


def witness_burst(size: int = 64, period: int = 5, seed: int = 0):
    """Two frames whose detail lives in disjoint regions.

    The scene has stripes varying along x in its left half and along y in
    its right half.  Frame 1 is blurred horizontally and frame 2 vertically
    by a box of one stripe period, which erases exactly one stripe family
    each, so frame 1 keeps detail only on the right and frame 2 only on the
    left.  A per-pixel weighting (WWBA) picks a different frame in each half;
    no single convolution does.  Returns ``(frames, clean, kernels)``.
    """
    from .core import convolve

    h = w = size
    rng = np.random.default_rng(seed)
    yy, xx = np.indices((h, w), dtype=np.float64)
    left = 0.5 + 0.35 * np.cos(2 * np.pi * xx / period)
    right = 0.5 + 0.35 * np.cos(2 * np.pi * yy / period)
    u = np.where(xx < w // 2, left, right) + 0.01 * rng.standard_normal((h, w))
    k_h = np.zeros((period, period))
    k_h[period // 2, :] = 1.0 / period
    kernels = [k_h, k_h.T.copy()]
    frames = np.stack([convolve(u, k, "periodic") for k in kernels])
    return frames, u, kernels


@dataclass
class Case:
    name: str
    mode: str
    size: tuple
    m: int
    kind: str = "gaussian"
    noise: float = 0.0
    levels: int = 1
    seed: int = 0


def build_matrix(kind: str = "small") -> list:
    """Named verification cases.  ``small`` covers each (mode, J, M) once at
    64x64; ``full`` adds sizes 32..128 (one non-square) and motion kernels."""
    if kind not in ("small", "full"):
        raise InvalidInputError(f"matrix must be 'small' or 'full', got {kind!r}")
    cases = []
    ms = (2, 5, 10)
    if kind == "small":
        for m in ms:
            cases.append(Case(f"prop1-M{m}", "fba", (64, 64), m))
        cases.append(Case("prop1-noise-M5", "fba", (64, 64), 5, noise=0.01))
        for j in (1, 2):
            for m in ms:
                cases.append(Case(f"prop2-J{j}-M{m}", "wwfba", (64, 64), m, levels=j))
        cases.append(Case("prop2-noise-J2-M5", "wwfba", (64, 64), 5, noise=0.01, levels=2))
    else:
        sizes = ((32, 32), (48, 40), (64, 64), (128, 128))
        for mode, levels in (("fba", (0,)), ("wwfba", (1, 2))):
            for j in levels:
                for s in sizes:
                    for m in ms:
                        for kk in ("gaussian", "motion"):
                            for noise in (0.0, 0.01):
                                tag = "prop1" if mode == "fba" else f"prop2-J{j}"
                                name = f"{tag}-M{m}-{s[0]}x{s[1]}-{kk}" + ("-noise" if noise else "")
                                cases.append(Case(name, mode, s, m, kk, noise, max(j, 1)))
    cases.append(Case("witness", "witness", (64, 64), 2))
    cases.append(Case("wwba-control", "wwba-control", (64, 64), 2))
    frames = 20 if kind == "small" else 50
    cases.append(Case(f"registration-residual-M{frames}", "registration", (64, 64), frames, seed=7))
    cases.append(Case(f"psnr-fba-M{frames}", "psnr", (64, 64), frames, seed=7))
    return cases


def _run_equivalence(case: Case, bank: FilterBank) -> EquivalenceReport:
    frames, u, kernels, noises = synthetic_case(case.size, case.m, case.kind, case.noise, case.seed)
    params = SpectralParams()
    if case.mode == "fba":
        out, weights = fba(frames, params, return_weights=True)
        k_e = equivalent_kernel_fba(kernels, weights)
        n_bar = verify_noise_term(noises, weights, "fba")
    else:
        out, weights = wwfba(frames, bank, case.levels, params, boundary="periodic", return_weights=True)
        k_e = equivalent_kernel_wwfba(kernels, weights, bank, case.levels)
        n_bar = verify_noise_term(noises, weights, "wwfba", bank, case.levels)
    predicted = apply_kernel(u, k_e) + n_bar
    err = relative_l2(out, predicted)
    return EquivalenceReport(
        case.name,
        case.mode,
        err,
        bool(math.isfinite(err) and err <= TOLERANCE),
        kernel=k_e,
        noise_term=n_bar if case.noise > 0 else None,
        detail={"dc_gain": float(np.sum(k_e))},
    )


def _run_witness(case: Case, bank: FilterBank) -> EquivalenceReport:
    frames, u, kernels = witness_burst(case.size[0], seed=case.seed)
    params = SpectralParams()
    a = wwba(frames, bank, 1, params, boundary="periodic")
    b, weights = wwfba(frames, bank, 1, params, boundary="periodic", return_weights=True)
    if case.mode == "witness":
        err = relative_l2(a, b)
        return EquivalenceReport(case.name, case.mode, err, err > SEPARATION)
    # WWBA substituted into the kernel-form comparison
    k_e = equivalent_kernel_wwfba(kernels, weights, bank, 1)
    err = relative_l2(a, apply_kernel(u, k_e))
    return EquivalenceReport(case.name, case.mode, err, err > SEPARATION, kernel=k_e)


def turbulent_burst(size, m: int, seed: int = 7):
    """Bar chart under shared mild blur, 2 px smooth warps and noise 0.005.

    Returns ``(frames, clean, truth)``."""
    from .synth import DegradationSpec, bar_chart, generate_burst

    h, w = (size, size) if np.isscalar(size) else size
    u = bar_chart(h, w)
    spec = DegradationSpec(
        warp_amplitude=2.0,
        warp_smoothness=16.0,
        blur=gaussian_kernel(0.5),
        noise_sigma=0.005,
        seed=seed,
    )
    frames, truth = generate_burst(u, m, spec)
    return frames, u, truth


def _run_synthetic(case: Case) -> EquivalenceReport:
    from .registration import average_frame, register_sequence
    from .synth import psnr

    frames, u, _ = turbulent_burst(case.size, case.m, case.seed)
    reg = register_sequence(frames)
    if case.mode == "registration":
        # spread of the frames around their mean, before and after alignment
        before = float(np.std(frames - average_frame(frames)))
        after = float(np.std(reg - average_frame(reg)))
        ratio = after / before
        return EquivalenceReport(case.name, case.mode, None, ratio <= 0.5, detail={"residual_ratio": ratio})
    raw = psnr(average_frame(frames), u)
    out = psnr(fba(reg), u)
    return EquivalenceReport(
        case.name, case.mode, None, out > raw, detail={"psnr": out, "psnr_raw_mean": raw}
    )


def run_case(case: Case, bank: FilterBank | None = None) -> EquivalenceReport:
    bank = bank or build_framelet_bank()
    t0 = time.perf_counter()
    if case.mode in ("fba", "wwfba"):
        rep = _run_equivalence(case, bank)
    elif case.mode in ("witness", "wwba-control"):
        rep = _run_witness(case, bank)
    elif case.mode in ("registration", "psnr"):
        rep = _run_synthetic(case)
    else:
        raise InvalidInputError(f"unknown case mode {case.mode!r}")
    rep.seconds = time.perf_counter() - t0
    return rep


def select_cases(cases: list, pattern: str | None) -> list:
    """Cases whose name equals ``pattern`` or matches it as a glob."""
    if pattern is None:
        return list(cases)
    return [c for c in cases if c.name == pattern or fnmatch.fnmatchcase(c.name, pattern)]


def run_cases(cases: list, bank: FilterBank | None = None) -> list:
    bank = bank or build_framelet_bank()
    return [run_case(c, bank) for c in cases]
