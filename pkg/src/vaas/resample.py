"""2-d resampling kernels shared by the scoring modules.

Bilinear uses the pixel-centre convention src = (dst + 0.5) * scale - 0.5
with edge clamping; nearest-neighbour uses src = floor((dst + 0.5) * scale).
Both are pinned here so results are bit-reproducible.
"""

from __future__ import annotations

import numpy as np


def _bilinear_axis(n_src: int, n_dst: int):
    s = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    i0 = np.floor(s).astype(np.int64)
    frac = s - i0
    lo = np.clip(i0, 0, n_src - 1)
    hi = np.clip(i0 + 1, 0, n_src - 1)
    return lo, hi, frac


def bilinear_resize(arr: np.ndarray, target: tuple) -> np.ndarray:
    """Resample a 2-d array to (H, W) with bilinear interpolation."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-d array, got shape {arr.shape}")
    h, w = target
    if h < 1 or w < 1:
        raise ValueError(f"invalid target size {target}")
    r0, r1, rf = _bilinear_axis(arr.shape[0], h)
    c0, c1, cf = _bilinear_axis(arr.shape[1], w)
    top = arr[r0][:, c0] * (1 - cf) + arr[r0][:, c1] * cf
    bot = arr[r1][:, c0] * (1 - cf) + arr[r1][:, c1] * cf
    return top * (1 - rf)[:, None] + bot * rf[:, None]


def nearest_resize(arr: np.ndarray, target: tuple) -> np.ndarray:
    """Resample a 2-d array to (H, W) with nearest-neighbour sampling."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-d array, got shape {arr.shape}")
    h, w = target
    if h < 1 or w < 1:
        raise ValueError(f"invalid target size {target}")
    rows = np.minimum(((np.arange(h) + 0.5) * (arr.shape[0] / h)).astype(np.int64),
                      arr.shape[0] - 1)
    cols = np.minimum(((np.arange(w) + 0.5) * (arr.shape[1] / w)).astype(np.int64),
                      arr.shape[1] - 1)
    return arr[rows][:, cols]
