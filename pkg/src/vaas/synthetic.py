"""Deterministic synthetic dataset: flat gradient-noise backgrounds with
optional pasted high-variance noise blocks and ground-truth masks.

Used by the end-to-end tests and the demo scripts; everything is seeded so
repeat builds are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .images import save_image
from .providers import ToyConfig
from .tensor_io import (DatasetManifest, ManifestMeta, SampleEntry,
                        save_manifest)

# Sharper toy attention than the 0.05 default: the flat synthetic
# backgrounds need it so the calibration spread clears the sigma floor.
SYNTHETIC_TOY_CONFIG = ToyConfig(seed=11, temperature=0.01)

IMAGE_SIZE = 224
BLOCK = 64


def _background(rng: np.random.Generator) -> np.ndarray:
    base = 0.5 + 0.15 * (rng.random() - 0.5)
    amp = rng.uniform(0.05, 0.3)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE] / (IMAGE_SIZE - 1.0)
    ramp = np.cos(theta) * xx + np.sin(theta) * yy
    noise = rng.normal(0.0, rng.uniform(0.005, 0.04), (IMAGE_SIZE, IMAGE_SIZE))
    g = base + amp * (ramp - ramp.mean()) + noise
    g = np.clip(g, 0.02, 0.98)
    return np.repeat(g[:, :, None], 3, axis=2)


def _paste_block(img: np.ndarray, rng: np.random.Generator):
    # patch-aligned placement keeps the tampered region crisp on the
    # 32-pixel scoring grid
    slots = IMAGE_SIZE // 32 - BLOCK // 32
    r0 = int(rng.integers(0, slots + 1)) * 32
    c0 = int(rng.integers(0, slots + 1)) * 32
    block = (rng.random((BLOCK, BLOCK)) < 0.1).astype(np.float64)
    img[r0:r0 + BLOCK, c0:c0 + BLOCK, :] = block[:, :, None]
    mask = np.zeros((IMAGE_SIZE, IMAGE_SIZE))
    mask[r0:r0 + BLOCK, c0:c0 + BLOCK] = 1.0
    return img, mask


def build_synthetic_dataset(out_dir, n_authentic: int = 20,
                            n_tampered: int = 20,
                            seed: int = 2024) -> Path:
    """Write images, masks and a manifest; returns the manifest path."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    samples = []
    for i in range(n_authentic):
        sid = f"auth_{i:03d}"
        save_image(_background(rng), out / "images" / f"{sid}.png")
        samples.append(SampleEntry(id=sid, image_path=f"images/{sid}.png",
                                   label="authentic"))
    for i in range(n_tampered):
        sid = f"tamp_{i:03d}"
        img, mask = _paste_block(_background(rng), rng)
        save_image(img, out / "images" / f"{sid}.png")
        save_image(mask, out / "masks" / f"{sid}.png")
        samples.append(SampleEntry(id=sid, image_path=f"images/{sid}.png",
                                   label="tampered",
                                   mask_path=f"masks/{sid}.png"))
    manifest = DatasetManifest(
        meta=ManifestMeta(image_size=(IMAGE_SIZE, IMAGE_SIZE), patch_size=32,
                          embed_dim=256),
        samples=tuple(samples), base_dir=out)
    path = out / "manifest.json"
    save_manifest(manifest, path)
    return path
