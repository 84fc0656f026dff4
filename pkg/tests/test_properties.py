"""Randomized property checks."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from burstacc.accumulation import soft_threshold
from burstacc.core import convolve, gaussian_blur
from burstacc.fourier import SpectralParams, fba_weights, fft2, ifft2
from burstacc.registration import FlowField, warp_bilinear
from burstacc.wavelet import analyze, build_framelet_bank, synthesize

BANK = build_framelet_bank()
finite = st.floats(-1.0, 1.0, allow_nan=False, width=64)


@st.composite
def images(draw, min_side=4, max_side=24):
    h = draw(st.integers(min_side, max_side))
    w = draw(st.integers(min_side, max_side))
    return draw(arrays(np.float64, (h, w), elements=finite))


@settings(max_examples=40, deadline=None)
@given(images(min_side=16, max_side=40), st.integers(1, 3), st.sampled_from(["symmetric", "periodic"]))
def test_wavelet_roundtrip_and_energy(img, levels, mode):
    sub = analyze(img, BANK, levels, mode)
    np.testing.assert_allclose(synthesize(sub, BANK), img, atol=1e-10)
    np.testing.assert_allclose(np.sum(sub.data**2), np.sum(img**2), rtol=1e-9, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(images(), st.floats(-3, 3), st.sampled_from(["symmetric", "periodic"]))
def test_convolve_linear(img, a, mode):
    k = np.arange(9, dtype=float).reshape(3, 3) / 36
    other = img[::-1, ::-1]
    lhs = convolve(a * img + other, k, mode)
    rhs = a * convolve(img, k, mode) + convolve(other, k, mode)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(images(min_side=8), st.floats(0.3, 3.0))
def test_blur_preserves_mean(img, sigma):
    np.testing.assert_allclose(gaussian_blur(img, sigma).mean(), img.mean(), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.floats(0, 15), st.floats(0, 3), st.integers(0, 2**31))
def test_weights_normalized(m, p, sigma, seed):
    r = np.random.default_rng(seed)
    frames = r.random((m, 10, 9))
    frames[r.random(m) < 0.3] = 0.0  # some all-zero frames
    w = fba_weights(fft2(frames), SpectralParams(p=p, sigma=sigma))
    assert np.all(w >= 0) and np.all(w <= 1)
    np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.floats(1e-6, 5))
def test_soft_threshold_prox(z, lam):
    g = soft_threshold(z, lam)
    assert abs(g) == max(abs(z) - lam, 0) or np.isclose(abs(g), max(abs(z) - lam, 0), atol=1e-12)
    # prox optimality: no nearby point lowers |g| + |g - z|^2 / (2 lam)
    def obj(v):
        return abs(v) + abs(v - z) ** 2 / (2 * lam)
    for d in (1e-4, -1e-4, 1e-4j, -1e-4j):
        assert obj(g) <= obj(g + d) + 1e-12


@settings(max_examples=30, deadline=None)
@given(images(min_side=4, max_side=12))
def test_fft_roundtrip(img):
    np.testing.assert_allclose(ifft2(fft2(img)), img, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(images(min_side=4, max_side=12), st.integers(0, 2**31))
def test_warp_stays_in_range(img, seed):
    r = np.random.default_rng(seed)
    flow = FlowField(r.normal(0, 3, img.shape), r.normal(0, 3, img.shape))
    out = warp_bilinear(img, flow)
    assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12
