"""Local anomaly scoring from patch self-consistency.

Each patch embedding is compared against its spatial neighbours by cosine
similarity; per-patch anomaly is one minus the neighbourhood mean, the
sample score is the plain mean over patches, and the per-patch grid is
upsampled bilinearly to a full-resolution anomaly map and binarised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resample import bilinear_resize, nearest_resize

OFFSETS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
OFFSETS_8 = OFFSETS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class PatchGridConfig:
    patch_size: int = 32
    neighbourhood: str = "8"      # "4" or "8" connectivity
    clamp_negative_sim: bool = True
    binarise_threshold: float = 0.5

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if self.neighbourhood not in ("4", "8"):
            raise ValueError("neighbourhood must be '4' or '8'")
        if not 0.0 < self.binarise_threshold < 1.0:
            raise ValueError("binarise_threshold must be in (0, 1)")

    @property
    def offsets(self):
        return OFFSETS_4 if self.neighbourhood == "4" else OFFSETS_8


@dataclass(frozen=True)
class LocalResult:
    per_patch: np.ndarray   # [rows, cols], values in [0, 1] with clamping on
    s_p: float              # mean of per_patch
    map_fullres: np.ndarray  # [H, W]
    mask: np.ndarray        # [H, W], values in {0, 1}


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"vector lengths differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm vector in cosine similarity")
    return float(np.dot(a, b) / (na * nb))


def _unit_grid(embeddings: np.ndarray, grid: tuple) -> np.ndarray:
    emb = np.asarray(embeddings, dtype=np.float64)
    rows, cols = grid
    if emb.ndim != 2 or emb.shape[0] != rows * cols:
        raise ValueError(
            f"embeddings shape {emb.shape} inconsistent with grid {grid}")
    if rows * cols < 2:
        raise ValueError("patch grid must contain at least 2 patches")
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-norm embedding (corrupt input)")
    return (emb / norms).reshape(rows, cols, -1)


def _clamp(sim: np.ndarray, cfg: PatchGridConfig) -> np.ndarray:
    return np.clip(sim, 0.0, 1.0) if cfg.clamp_negative_sim else sim


def patch_anomaly(embeddings: np.ndarray, grid: tuple, index: int,
                  cfg: PatchGridConfig = PatchGridConfig()) -> float:
    """Anomaly of one patch: 1 - mean similarity to in-bounds neighbours."""
    unit = _unit_grid(embeddings, grid)
    rows, cols = grid
    r, c = divmod(index, cols)
    if not (0 <= r < rows and 0 <= c < cols):
        raise ValueError(f"patch index {index} out of range for grid {grid}")
    sims = []
    for dr, dc in cfg.offsets:
        rr, cc = r + dr, c + dc
        if 0 <= rr < rows and 0 <= cc < cols:
            sims.append(float(np.dot(unit[r, c], unit[rr, cc])))
    if not sims:
        raise ValueError("patch has no neighbours")
    sims = _clamp(np.array(sims), cfg)
    return float(1.0 - sims.mean())


def local_score(embeddings: np.ndarray, grid: tuple, cfg: PatchGridConfig,
                image_size: tuple) -> LocalResult:
    """Score every patch, aggregate, and upsample to image resolution."""
    rows, cols = grid
    k = cfg.patch_size
    if (rows * k, cols * k) != tuple(image_size):
        raise ValueError(
            f"grid {grid} with patch size {k} inconsistent with image {image_size}")
    unit = _unit_grid(embeddings, grid)
    sim_sum = np.zeros((rows, cols))
    count = np.zeros((rows, cols))
    for dr, dc in cfg.offsets:
        rs = slice(max(dr, 0), rows + min(dr, 0))
        rd = slice(max(-dr, 0), rows + min(-dr, 0))
        cs = slice(max(dc, 0), cols + min(dc, 0))
        cd = slice(max(-dc, 0), cols + min(-dc, 0))
        sims = np.einsum("ijk,ijk->ij", unit[rd, cd], unit[rs, cs])
        sim_sum[rd, cd] += _clamp(sims, cfg)
        count[rd, cd] += 1.0
    per_patch = 1.0 - sim_sum / count
    full = bilinear_resize(per_patch, image_size)
    mask = (full >= cfg.binarise_threshold).astype(np.float64)
    return LocalResult(per_patch=per_patch, s_p=float(per_patch.mean()),
                       map_fullres=full, mask=mask)


def resize_mask_nn(mask: np.ndarray, target: tuple) -> np.ndarray:
    """Nearest-neighbour mask resize; output stays strictly binary."""
    mask = np.asarray(mask)
    vals = np.unique(mask)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError("mask must be binary")
    return nearest_resize(mask.astype(np.float64), target)
