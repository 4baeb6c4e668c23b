"""Image loading helpers (8-bit PNG/PPM in, [0,1] float arrays out)."""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage


def load_image(path) -> np.ndarray:
    """Read an image file as an HxWx3 float array with values in [0, 1]."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def load_mask(path) -> np.ndarray:
    """Read a mask file as a binary HxW float array (threshold at mid-grey)."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr >= 128).astype(np.float64)


def save_image(arr: np.ndarray, path) -> None:
    """Write an HxWx3 or HxW [0,1] float array as an 8-bit PNG."""
    a = np.clip(np.asarray(arr), 0.0, 1.0)
    u8 = (a * 255.0 + 0.5).astype(np.uint8)
    PILImage.fromarray(u8).save(path, format="PNG")
