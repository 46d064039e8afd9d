"""8-bit RGB PNG helpers over float arrays in [0, 1]."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def save_png(path: str | Path, image: np.ndarray) -> None:
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {arr.shape}")
    Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="RGB").save(Path(path))


def load_png(path: str | Path) -> np.ndarray:
    with Image.open(Path(path)) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def resize_bilinear(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of a float (H, W, 3) image."""
    src = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    channels = []
    for c in range(src.shape[2]):
        im = Image.fromarray(src[:, :, c].astype(np.float32), mode="F")
        channels.append(np.asarray(im.resize((width, height), Image.BILINEAR), dtype=np.float64))
    return np.stack(channels, axis=2)
