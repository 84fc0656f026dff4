import json
import math

import numpy as np
import pytest

from burstacc.core import InvalidInputError, gaussian_kernel
from burstacc.synth import (
    PSNR_CAP,
    DegradationSpec,
    GroundTruth,
    bar_chart,
    generate_burst,
    psnr,
    random_smooth_warp,
    save_burst,
)


def test_bar_chart():
    img = bar_chart(64, 64)
    assert img.shape == (64, 64)
    assert set(np.unique(img)) == {0.15, 0.85}
    # vertical bars in the upper part, horizontal bars in the lower part
    assert np.unique(img[10]).size == 2 and np.unique(img[:, 2][50:]).size == 2
    assert bar_chart(40, 80).shape == (40, 80)


def test_warp_zero_amplitude():
    f = random_smooth_warp(16, 12, DegradationSpec(), 0)
    assert f.shape == (12, 16) and not f.dx.any() and not f.dy.any()


def test_warp_deterministic():
    spec = DegradationSpec(warp_amplitude=2, seed=5)
    a, b = random_smooth_warp(32, 32, spec, 3), random_smooth_warp(32, 32, spec, 3)
    assert np.array_equal(a.dx, b.dx) and np.array_equal(a.dy, b.dy)
    c = random_smooth_warp(32, 32, spec, 4)
    assert not np.array_equal(a.dx, c.dx)


def correlation_length(field):
    """Lag at which the circular autocorrelation falls to exp(-1/2), along x."""
    f = field - field.mean()
    ac = np.real(np.fft.ifft2(np.abs(np.fft.fft2(f)) ** 2))
    row = ac[0] / ac[0, 0]
    target = math.exp(-0.5)
    k = int(np.argmax(row < target))
    # linear interpolation between the bracketing lags
    return k - 1 + (row[k - 1] - target) / (row[k - 1] - row[k])


def test_warp_amplitude_and_correlation():
    spec = DegradationSpec(warp_amplitude=2.0, warp_smoothness=8.0, seed=11)
    lengths = []
    for i in range(8):
        f = random_smooth_warp(64, 64, spec, i)
        assert f.magnitude().max() == pytest.approx(2.0, abs=1e-9)
        lengths += [correlation_length(f.dx), correlation_length(f.dy)]
    assert abs(np.mean(lengths) - 8.0) <= 0.3 * 8.0


def test_all_zero_spec(rng):
    clean = rng.random((16, 16))
    frames, truth = generate_burst(clean, 4, DegradationSpec())
    for f in frames:
        np.testing.assert_array_equal(f, clean)
    assert len(truth.flows) == 4 and truth.kernels == [None] * 4


def test_noise_only(rng):
    clean = rng.random((64, 64))
    frames, truth = generate_burst(clean, 5, DegradationSpec(noise_sigma=0.01, seed=3))
    for f, n in zip(frames, truth.noises):
        assert abs(np.std(f - clean) - 0.01) <= 0.001
        np.testing.assert_allclose(f - clean, n, atol=1e-15)


def test_burst_deterministic():
    spec = DegradationSpec(warp_amplitude=2, blur=gaussian_kernel(0.8), noise_sigma=0.01, seed=9)
    a, _ = generate_burst(bar_chart(32, 32), 3, spec)
    b, _ = generate_burst(bar_chart(32, 32), 3, spec)
    assert np.array_equal(a, b)


def test_per_frame_kernels_and_order():
    u = bar_chart(32, 32)
    kernels = [gaussian_kernel(0.5), gaussian_kernel(1.5)]
    frames, truth = generate_burst(u, 2, DegradationSpec(blur=kernels))
    assert np.std(frames[0]) > np.std(frames[1])
    assert truth.kernels[1].shape == kernels[1].shape
    with pytest.raises(InvalidInputError):
        generate_burst(u, 3, DegradationSpec(blur=kernels))
    spec = dict(warp_amplitude=1.5, blur=gaussian_kernel(1.0), seed=1)
    bw, _ = generate_burst(u, 1, DegradationSpec(**spec))
    wb, _ = generate_burst(u, 1, DegradationSpec(order="warp-blur", **spec))
    assert not np.array_equal(bw, wb)
    assert np.max(np.abs(bw - wb)) < 0.2


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        DegradationSpec(noise_sigma=-1)
    with pytest.raises(InvalidInputError):
        DegradationSpec(order="sideways")
    with pytest.raises(InvalidInputError):
        generate_burst(np.zeros((8, 8)), 0)


def test_psnr_cases(rng):
    a = rng.random((10, 10))
    assert psnr(a, a) == PSNR_CAP >= 100
    assert psnr(a, a + 0.1) == pytest.approx(20.0)
    b = rng.random((10, 10))
    mse = sum((a[i, j] - b[i, j]) ** 2 for i in range(10) for j in range(10)) / 100
    assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse))
    with pytest.raises(InvalidInputError):
        psnr(a, np.zeros((5, 5)))


def test_save_burst(tmp_path):
    from burstacc.image_io import load_sequence

    spec = DegradationSpec(warp_amplitude=1, noise_sigma=0.01, seed=2)
    frames, truth = generate_burst(bar_chart(16, 16), 3, spec)
    paths = save_burst(tmp_path / "b", frames, truth)
    assert [p.name for p in paths] == ["frame_001.png", "frame_002.png", "frame_003.png"]
    rec = json.loads((tmp_path / "b" / "truth.json").read_text())
    assert len(rec["flows"]) == 3 and np.array(rec["noises"]).shape == (3, 16, 16)
    loaded = load_sequence(tmp_path / "b")
    np.testing.assert_allclose(loaded, np.clip(frames, 0, 1), atol=1 / 65535)
    assert GroundTruth().to_json()["noises"] is None
