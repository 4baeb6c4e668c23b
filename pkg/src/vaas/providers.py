"""Per-sample feature sources.

Two providers share one output contract (FeatureBundle): a file-based
provider that loads exported tensors, and a deterministic toy provider that
synthesises attention and patch embeddings directly from image pixels so the
whole pipeline runs offline. The toy provider is a pure function of
(image bytes, config); repeated calls are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .images import load_image
from .rng import fill_signed_unit
from .tensor_io import DatasetManifest, read_tensor_file

ROW_SUM_TOL = 1e-4


class ProviderError(ValueError):
    pass


@dataclass(frozen=True)
class ToyConfig:
    seed: int = 0
    token_grid: tuple = (14, 14)
    temperature: float = 0.05
    patch_size: int = 32
    embed_dim: int = 256

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")


@dataclass(frozen=True)
class FeatureBundle:
    """Attention stack + patch embeddings for one sample.

    attention: [L, Hh, T, T] row-stochastic (within 1e-4).
    embeddings: [M, D] with M = grid[0] * grid[1].
    token_grid: spatial layout of the attention tokens; the attention may
    carry one extra leading global token (T = rows * cols + 1).
    """

    attention: np.ndarray
    embeddings: np.ndarray
    grid: tuple
    image_size: tuple
    token_grid: tuple


def validate_bundle(b: FeatureBundle) -> FeatureBundle:
    att = np.asarray(b.attention)
    if att.ndim != 4 or att.shape[2] != att.shape[3]:
        raise ProviderError(f"attention must be [L, Hh, T, T], got {att.shape}")
    row_sums = att.sum(axis=3)
    if not np.all(np.abs(row_sums - 1.0) <= ROW_SUM_TOL):
        worst = float(np.abs(row_sums - 1.0).max())
        raise ProviderError(
            f"attention rows must sum to 1 within {ROW_SUM_TOL} (worst |err|={worst:.2e})")
    emb = np.asarray(b.embeddings)
    if emb.ndim != 2:
        raise ProviderError(f"embeddings must be [M, D], got {emb.shape}")
    rows, cols = b.grid
    if rows * cols != emb.shape[0]:
        raise ProviderError(
            f"grid {b.grid} inconsistent with {emb.shape[0]} embeddings")
    t = att.shape[2]
    gr, gc = b.token_grid
    if t not in (gr * gc, gr * gc + 1):
        raise ProviderError(
            f"attention token count {t} inconsistent with token grid {b.token_grid}")
    return b


# --- toy provider ------------------------------------------------------------

def _grayscale(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ProviderError(f"expected HxWx3 image, got shape {img.shape}")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ProviderError("image channel values must lie in [0, 1]")
    return img.mean(axis=2)


def toy_attention(img: np.ndarray, cfg: ToyConfig) -> np.ndarray:
    """Similarity-kernel attention over 16x16 intensity cells.

    Token features are the (mean, std) of grayscale intensities per cell,
    plus one leading global token carrying whole-image (mean, std);
    A[i][j] = exp(-||f_i - f_j||^2 / temperature), row-normalised.
    Returns a [1, 1, T, T] array with T = rows * cols + 1.
    """
    gr, gc = cfg.token_grid
    g = _grayscale(img)
    h, w = g.shape
    if (h, w) != (16 * gr, 16 * gc):
        raise ProviderError(
            f"toy attention expects a {16 * gr}x{16 * gc} image, got {h}x{w}")
    cells = g.reshape(gr, 16, gc, 16).transpose(0, 2, 1, 3).reshape(gr * gc, 256)
    feats = np.empty((gr * gc + 1, 2), dtype=np.float64)
    feats[0] = (g.mean(), g.std())
    feats[1:, 0] = cells.mean(axis=1)
    feats[1:, 1] = cells.std(axis=1)
    d2 = ((feats[:, None, :] - feats[None, :, :]) ** 2).sum(axis=2)
    a = np.exp(-d2 / cfg.temperature)
    a /= a.sum(axis=1, keepdims=True)
    return a[None, None, :, :].astype(np.float32)


_PROJECTION_CACHE: dict = {}


def _projection(seed: int, embed_dim: int, in_dim: int) -> np.ndarray:
    key = (seed, embed_dim, in_dim)
    r = _PROJECTION_CACHE.get(key)
    if r is None:
        r = fill_signed_unit(seed, embed_dim * in_dim).reshape(embed_dim, in_dim)
        if len(_PROJECTION_CACHE) > 8:
            _PROJECTION_CACHE.clear()
        _PROJECTION_CACHE[key] = r
    return r


def toy_patch_embeddings(img: np.ndarray, cfg: ToyConfig) -> np.ndarray:
    """Seeded random projection of flattened patches, L2-normalised rows."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ProviderError(f"expected HxWx3 image, got shape {img.shape}")
    k = cfg.patch_size
    h, w = img.shape[:2]
    if h % k or w % k:
        raise ProviderError(f"image {h}x{w} not divisible by patch size {k}")
    rows, cols = h // k, w // k
    patches = (img.reshape(rows, k, cols, k, 3)
                  .transpose(0, 2, 1, 3, 4)
                  .reshape(rows * cols, 3 * k * k))
    r = _projection(cfg.seed, cfg.embed_dim, 3 * k * k)
    emb = patches @ r.T
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ProviderError("zero-norm toy embedding")
    return (emb / norms).astype(np.float32)


def toy_bundle(img: np.ndarray, cfg: ToyConfig) -> FeatureBundle:
    h, w = np.asarray(img).shape[:2]
    emb = toy_patch_embeddings(img, cfg)
    return validate_bundle(FeatureBundle(
        attention=toy_attention(img, cfg),
        embeddings=emb,
        grid=(h // cfg.patch_size, w // cfg.patch_size),
        image_size=(h, w),
        token_grid=cfg.token_grid,
    ))


# --- manifest-driven fetch ---------------------------------------------------

def _infer_token_grid(t: int) -> tuple:
    for count in (t, t - 1):
        side = math.isqrt(count)
        if side * side == count:
            return (side, side)
    raise ProviderError(f"cannot infer a square token grid from {t} tokens")


def fetch_features(manifest: DatasetManifest, sample_id: str, mode: str,
                   cfg: ToyConfig = ToyConfig()) -> FeatureBundle:
    """Load (file mode) or synthesise (toy mode) features for one sample."""
    entry = manifest.sample(sample_id)
    meta = manifest.meta
    h, w = meta.image_size
    grid = (h // meta.patch_size, w // meta.patch_size)

    if mode == "toy":
        img = load_image(manifest.resolve(entry.image_path))
        if img.shape[:2] != (h, w):
            raise ProviderError(
                f"sample {sample_id!r}: image is {img.shape[0]}x{img.shape[1]}, "
                f"manifest says {h}x{w}")
        return toy_bundle(img, cfg)

    if mode != "file":
        raise ProviderError(f"unknown provider mode {mode!r}")
    if not entry.attention_path or not entry.embeddings_path:
        raise ProviderError(
            f"sample {sample_id!r}: file mode needs attention_path and embeddings_path")
    att = read_tensor_file(manifest.resolve(entry.attention_path)).data
    emb = read_tensor_file(manifest.resolve(entry.embeddings_path)).data
    if emb.ndim != 2 or emb.shape != (grid[0] * grid[1], meta.embed_dim):
        raise ProviderError(
            f"sample {sample_id!r}: embeddings shape {emb.shape} does not match "
            f"meta [{grid[0] * grid[1]}, {meta.embed_dim}]")
    if att.ndim != 4 or att.shape[2] != att.shape[3]:
        raise ProviderError(
            f"sample {sample_id!r}: attention shape {att.shape} is not [L, Hh, T, T]")
    return validate_bundle(FeatureBundle(
        attention=att,
        embeddings=emb,
        grid=grid,
        image_size=(h, w),
        token_grid=_infer_token_grid(att.shape[2]),
    ))
