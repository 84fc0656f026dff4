import numpy as np
import pytest
from PIL import Image

from burstacc.core import EmptySequenceError, InvalidInputError
from burstacc.image_io import load_image, load_sequence, natural_key, save_image


def write_pgm(path, arr, maxval):
    """Binary P5 writer (big-endian samples for maxval > 255)."""
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode()
    data = arr.astype(">u2" if maxval > 255 else np.uint8).tobytes()
    path.write_bytes(header + data)


def test_roundtrip_constant(tmp_path):
    p = tmp_path / "c.png"
    save_image(np.full((5, 7), 0.5), p)
    out = load_image(p)
    assert out.shape == (5, 7)
    assert np.max(np.abs(out - 0.5)) <= 1 / 65535


def test_roundtrip_random(tmp_path, rng):
    img = rng.uniform(-0.3, 1.3, (16, 12))
    p = tmp_path / "r.png"
    save_image(img, p)
    assert np.max(np.abs(load_image(p) - np.clip(img, 0, 1))) <= 0.5 / 65535 + 1e-12


def test_clamp(tmp_path):
    img = np.array([[1.7, -0.2], [0.25, 1.0]])
    p = tmp_path / "k.png"
    save_image(img, p)
    raw = np.array(Image.open(p))
    assert raw[0, 0] == 65535 and raw[0, 1] == 0
    out = load_image(p)
    assert out[0, 0] == 1.0 and out[0, 1] == 0.0


def test_saved_as_16bit(tmp_path):
    p = tmp_path / "b.png"
    save_image(np.full((3, 3), 0.001), p)
    assert np.array(Image.open(p)).max() == round(0.001 * 65535)


def test_sequence_of_fifty(tmp_path):
    for i in range(1, 51):
        save_image(np.full((4, 4), i / 100), tmp_path / f"{i:03d}.png")
    frames = load_sequence(tmp_path)
    assert len(frames) == 50
    assert [round(f[0, 0] * 100) for f in frames] == list(range(1, 51))


def test_natural_order(tmp_path):
    for i in (10, 2, 1):
        save_image(np.full((3, 3), i / 20), tmp_path / f"f{i}.png")
    vals = [round(f[0, 0] * 20) for f in load_sequence(tmp_path)]
    assert vals == [1, 2, 10]
    assert sorted(["f10", "f2", "F1"], key=natural_key) == ["F1", "f2", "f10"]


def test_single_frame(tmp_path):
    save_image(np.zeros((6, 6)), tmp_path / "only.png")
    assert len(load_sequence(tmp_path)) == 1


def test_mismatch_names_second_file(tmp_path):
    save_image(np.zeros((64, 64)), tmp_path / "a1.png")
    save_image(np.zeros((32, 32)), tmp_path / "a2.png")
    with pytest.raises(InvalidInputError, match="a2.png"):
        load_sequence(tmp_path)


def test_empty_and_missing(tmp_path):
    (tmp_path / "notes.txt").write_text("x")
    with pytest.raises(EmptySequenceError):
        load_sequence(tmp_path)
    with pytest.raises(EmptySequenceError):
        load_sequence(tmp_path, "*.png")
    with pytest.raises(InvalidInputError):
        load_sequence(tmp_path / "nope")


def test_pattern_filter(tmp_path):
    save_image(np.zeros((3, 3)), tmp_path / "keep_1.png")
    save_image(np.ones((3, 3)), tmp_path / "skip_1.png")
    frames = load_sequence(tmp_path, "keep_*")
    assert len(frames) == 1 and frames[0].max() == 0


@pytest.mark.parametrize("maxval", [255, 65535])
def test_pgm(tmp_path, maxval):
    arr = np.array([[0, maxval // 3], [maxval // 2, maxval]])
    p = tmp_path / "x.pgm"
    write_pgm(p, arr, maxval)
    np.testing.assert_allclose(load_image(p), arr / maxval, atol=1e-12)


def test_8bit_png_scaled(tmp_path):
    p = tmp_path / "e.png"
    Image.fromarray(np.array([[0, 51, 255]], dtype=np.uint8)).save(p)
    np.testing.assert_allclose(load_image(p), [[0.0, 0.2, 1.0]], atol=1e-12)


def test_color_png_luminance(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 1] = 255
    p = tmp_path / "g.png"
    Image.fromarray(rgb).save(p)
    np.testing.assert_allclose(load_image(p), 0.587, atol=1e-12)


def test_save_error_has_path(tmp_path):
    target = tmp_path / "missing_dir" / "o.png"
    with pytest.raises(OSError, match="missing_dir"):
        save_image(np.zeros((2, 2)), target)
