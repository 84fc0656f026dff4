import numpy as np
import pytest

from burstacc.core import InvalidInputError
from burstacc.registration import (
    FlowField,
    FlowOptions,
    average_frame,
    bilinear_sample,
    lk_flow,
    register_sequence,
    warp_bilinear,
)
from burstacc.synth import DegradationSpec, bar_chart, generate_burst
from oracles import grid, sinusoidal_case, texture


def test_average_frame(rng):
    x = rng.random((5, 5))
    np.testing.assert_allclose(average_frame([x, x, x]), x, rtol=1e-15)
    np.testing.assert_array_equal(average_frame([x, x]), x)
    np.testing.assert_array_equal(average_frame([np.zeros((3, 3)), np.ones((3, 3))]), 0.5)
    frames = rng.random((50, 8, 8))
    direct = np.zeros((8, 8))
    for f in frames:
        direct += f
    np.testing.assert_allclose(average_frame(frames), direct / 50, atol=1e-12)


def test_warp_zero_flow(rng):
    img = rng.random((7, 9))
    assert np.array_equal(warp_bilinear(img, FlowField.zeros(img.shape)), img)


def test_warp_integer_shift(rng):
    img = rng.random((6, 8))
    out = warp_bilinear(img, FlowField(np.ones(img.shape), np.zeros(img.shape)))
    np.testing.assert_array_equal(out[:, :-1], img[:, 1:])
    np.testing.assert_array_equal(out[:, -1], img[:, -1])


def scalar_bilinear(img, x, y):
    h, w = img.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = min(int(np.floor(x)), w - 2), min(int(np.floor(y)), h - 2)
    fx, fy = x - x0, y - y0
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x0 + 1] * fx * (1 - fy)
        + img[y0 + 1, x0] * (1 - fx) * fy
        + img[y0 + 1, x0 + 1] * fx * fy
    )


def test_warp_random_flow_oracle(rng):
    img = rng.random((8, 8))
    flow = FlowField(rng.uniform(-3, 3, (8, 8)), rng.uniform(-3, 3, (8, 8)))
    out = warp_bilinear(img, flow)
    for y in range(8):
        for x in range(8):
            assert out[y, x] == pytest.approx(scalar_bilinear(img, x + flow.dx[y, x], y + flow.dy[y, x]), abs=1e-15)


def test_warp_linear_in_image(rng):
    a, b = rng.random((2, 10, 10))
    flow = FlowField(rng.normal(0, 1, (10, 10)), rng.normal(0, 1, (10, 10)))
    np.testing.assert_allclose(
        warp_bilinear(2 * a - 3 * b, flow), 2 * warp_bilinear(a, flow) - 3 * warp_bilinear(b, flow), atol=1e-14
    )


def test_warp_shape_mismatch():
    with pytest.raises(InvalidInputError):
        warp_bilinear(np.zeros((4, 4)), FlowField.zeros((4, 5)))


def test_bilinear_sample_exact_on_grid(rng):
    img = rng.random((5, 6))
    yy, xx = np.indices(img.shape, dtype=float)
    np.testing.assert_array_equal(bilinear_sample(img, xx, yy), img)


def test_flow_identical_images():
    xx, yy = grid(64)
    ref = texture(xx, yy)
    flow = lk_flow(ref, ref)
    assert np.max(np.abs(flow.dx)) <= 1e-8 and np.max(np.abs(flow.dy)) <= 1e-8


def test_flow_translation():
    xx, yy = grid(96)
    ref = texture(xx, yy)
    moving = texture(xx - 2.0, yy - 3.0)
    flow = lk_flow(ref, moving)
    m = 16
    dx, dy = flow.dx[m:-m, m:-m], flow.dy[m:-m, m:-m]
    assert abs(dx.mean() - 2) < 0.2 and abs(dy.mean() - 3) < 0.2
    assert np.hypot(dx - 2, dy - 3).mean() <= 0.2


def test_flow_sinusoidal_warp():
    ref, moving, tdx, tdy = sinusoidal_case()
    flow = lk_flow(ref, moving)
    m = 16
    epe = np.hypot(flow.dx - tdx, flow.dy - tdy)[m:-m, m:-m]
    assert epe.mean() < 0.3


def test_flow_errors():
    with pytest.raises(InvalidInputError):
        lk_flow(np.zeros((64, 64)), np.zeros((64, 60)))
    with pytest.raises(InvalidInputError, match="too small"):
        lk_flow(np.zeros((40, 40)), np.zeros((40, 40)))
    with pytest.raises(InvalidInputError):
        FlowOptions(window=10)
    with pytest.raises(InvalidInputError):
        FlowOptions(pyramid_levels=0)


def test_flow_cap():
    xx, yy = grid(64)
    ref = texture(xx, yy)
    flow = lk_flow(ref, texture(xx - 3, yy), FlowOptions(max_fraction=0.01))
    assert flow.magnitude().max() <= 0.64 + 1e-12
    assert np.all(np.isfinite(flow.dx))


def warped_burst(m=50, seed=3):
    spec = DegradationSpec(warp_amplitude=2.0, warp_smoothness=16.0, seed=seed)
    frames, _ = generate_burst(bar_chart(64, 64), m, spec)
    return frames


def test_register_reduces_spread():
    frames = warped_burst()
    reg = register_sequence(frames)
    before = np.std(frames, axis=0).mean()
    after = np.std(reg, axis=0).mean()
    assert after <= 0.5 * before


def test_register_residual_reduction():
    for seed in (1, 2):
        frames = warped_burst(12, seed)
        reg = register_sequence(frames)
        va, vb = average_frame(frames), average_frame(reg)
        before = sum(np.linalg.norm(f - va) for f in frames)
        after = sum(np.linalg.norm(f - vb) for f in reg)
        assert after <= before
        assert reg.shape == frames.shape


def test_register_trivial(rng):
    x = rng.random((48, 48))
    out = register_sequence([x] * 3)
    assert np.max(np.abs(out - x)) <= 1e-8
    single = register_sequence([x])
    assert np.array_equal(single[0], x)
    with pytest.raises(InvalidInputError):
        register_sequence([x], iterations=0)


def test_register_iterations_and_workers():
    frames = warped_burst(8)
    one = register_sequence(frames, workers=1)
    many = register_sequence(frames, workers=4)
    assert np.array_equal(one, many)
    two = register_sequence(frames, iterations=2, workers=1)
    assert two.shape == frames.shape


def test_thread_env(monkeypatch):
    from burstacc.registration import worker_count

    monkeypatch.setenv("BURSTACC_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("BURSTACC_THREADS", "zero")
    assert worker_count() >= 1
