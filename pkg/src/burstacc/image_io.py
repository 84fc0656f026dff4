"""Frame loading and saving (PNG, binary PGM)."""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .core import EmptySequenceError, InvalidInputError, as_image, to_luminance

log = logging.getLogger(__name__)

SUPPORTED_SUFFIXES = (".png", ".pgm")


def natural_key(name: str):
    """Sort key treating digit runs as integers: ``f2 < f10``."""
    return [int(tok) if tok.isdigit() else tok.lower() for tok in re.split(r"(\d+)", name)]


def _scale_for(mode: str, arr: np.ndarray) -> float:
    if mode in ("I;16", "I;16B", "I;16L", "I;16N"):
        return 65535.0
    if mode == "I":
        # Pillow widens 16-bit PNG/PGM to "I"; 8-bit never lands here
        return 65535.0
    if arr.dtype == np.uint8 or mode in ("L", "P", "RGB", "RGBA", "LA"):
        return 255.0
    if mode == "1":
        return 1.0
    raise InvalidInputError(f"unsupported pixel mode {mode!r}")


def load_image(path) -> np.ndarray:
    """Read one grayscale or color frame as luminance in ``[0, 1]``."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            elif im.mode == "LA":
                im = im.convert("L")
            mode = im.mode
            arr = np.array(im)
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    scale = _scale_for(mode, arr)
    return to_luminance(arr.astype(np.float64) / scale)


def load_sequence(directory, pattern: str = "*") -> list[np.ndarray]:
    """Load every supported file in ``directory`` matching ``pattern``.

    Frames are ordered by natural filename order, which defines temporal order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidInputError(f"{directory} is not a directory")
    paths = [
        p for p in directory.glob(pattern)
        if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES
    ]
    if not paths:
        raise EmptySequenceError(f"no PNG/PGM files match {pattern!r} in {directory}")
    paths.sort(key=lambda p: natural_key(p.name))
    frames = []
    for p in paths:
        frame = load_image(p)
        if frames and frame.shape != frames[0].shape:
            raise InvalidInputError(
                f"{p.name} has shape {frame.shape}, expected {frames[0].shape} (from {paths[0].name})"
            )
        frames.append(frame)
    log.debug("loaded %d frames of shape %s from %s", len(frames), frames[0].shape, directory)
    return frames


def save_image(image, path) -> None:
    """Clamp to ``[0, 1]`` and write a 16-bit grayscale PNG (or PGM by suffix)."""
    img = as_image(image)
    path = Path(path)
    q = np.rint(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    try:
        Image.fromarray(q).save(path)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot write image {path}: {exc}") from exc
