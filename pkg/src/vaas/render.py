"""Six-panel composite rendering for one scored sample.

Panel order: input image, ground-truth mask (or N/A), binary local mask,
local anomaly heatmap overlay, global attention overlay, hybrid score card.
Heatmaps use a monotone black->red->yellow->white ramp; overlays blend
55% image with 45% ramp colour.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from PIL import Image as PILImage
from PIL import ImageDraw

PANEL_GAP = 4
OVERLAY_IMAGE_WEIGHT = 0.55


def heat_ramp(values: np.ndarray) -> np.ndarray:
    """Map [0,1] values to RGB through a monotone 'hot' ramp."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    r = np.clip(3.0 * v, 0.0, 1.0)
    g = np.clip(3.0 * v - 1.0, 0.0, 1.0)
    b = np.clip(3.0 * v - 2.0, 0.0, 1.0)
    return np.stack([r, g, b], axis=2)


def _normalise_map(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    return np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)


def overlay(image: np.ndarray, values: np.ndarray,
            normalise: bool = True) -> np.ndarray:
    v = _normalise_map(values) if normalise else np.clip(values, 0.0, 1.0)
    heat = heat_ramp(v)
    return OVERLAY_IMAGE_WEIGHT * image + (1.0 - OVERLAY_IMAGE_WEIGHT) * heat


def _to_pil(arr: np.ndarray) -> PILImage.Image:
    u8 = (np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    return PILImage.fromarray(u8)


def _na_panel(size: tuple) -> PILImage.Image:
    panel = PILImage.new("RGB", (size[1], size[0]), (40, 40, 40))
    draw = ImageDraw.Draw(panel)
    draw.text((size[1] // 2 - 12, size[0] // 2 - 6), "N/A", fill=(200, 200, 200))
    return panel


def _score_panel(size: tuple, s_h: float, s_f: float, s_p: float) -> PILImage.Image:
    h, w = size
    panel = PILImage.new("RGB", (w, h), (20, 20, 20))
    draw = ImageDraw.Draw(panel)
    bar_h = 18
    y = h // 2 - bar_h // 2
    fill_w = int(round(np.clip(s_h, 0.0, 1.0) * (w - 24)))
    ramp = tuple(int(c * 255) for c in heat_ramp(np.array([[s_h]]))[0, 0])
    draw.rectangle([12, y, w - 12, y + bar_h], outline=(180, 180, 180))
    if fill_w > 0:
        draw.rectangle([12, y, 12 + fill_w, y + bar_h], fill=ramp)
    draw.text((12, y - 34), f"hybrid  {s_h:.4f}", fill=(240, 240, 240))
    draw.text((12, y + bar_h + 8), f"global  {s_f:.4f}", fill=(200, 200, 200))
    draw.text((12, y + bar_h + 24), f"local   {s_p:.4f}", fill=(200, 200, 200))
    return panel


def render_composite(image: np.ndarray,
                     gt_mask: Optional[np.ndarray],
                     local_mask: np.ndarray,
                     local_map: np.ndarray,
                     attention_map: np.ndarray,
                     s_h: float, s_f: float, s_p: float) -> PILImage.Image:
    """Compose the six panels side by side into one image."""
    size = image.shape[:2]
    panels = [_to_pil(image)]
    if gt_mask is None:
        panels.append(_na_panel(size))
    else:
        panels.append(_to_pil(np.repeat(np.asarray(gt_mask)[:, :, None], 3, axis=2)))
    panels.append(_to_pil(np.repeat(np.asarray(local_mask)[:, :, None], 3, axis=2)))
    panels.append(_to_pil(overlay(image, local_map, normalise=False)))
    panels.append(_to_pil(overlay(image, attention_map, normalise=True)))
    panels.append(_score_panel(size, s_h, s_f, s_p))

    h = size[0]
    w = sum(p.width for p in panels) + PANEL_GAP * (len(panels) - 1)
    canvas = PILImage.new("RGB", (w, h), (0, 0, 0))
    x = 0
    for p in panels:
        canvas.paste(p, (x, 0))
        x += p.width + PANEL_GAP
    return canvas
