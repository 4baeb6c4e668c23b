"""Segmentation-style losses as pure value + analytic-gradient functions.

No optimiser lives here; these exist so the composite objective can be
evaluated and its gradients verified against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    lambda_bce: float = 1.0
    lambda_dice: float = 0.7
    lambda_focal: float = 1.0
    omega_align: float = 0.1
    focal_gamma: float = 2.0
    dice_smoothing: float = 1.0

    def __post_init__(self):
        for name in ("lambda_bce", "lambda_dice", "lambda_focal",
                     "omega_align", "focal_gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.dice_smoothing <= 0:
            raise ValueError("dice_smoothing must be positive")


@dataclass(frozen=True)
class AlignmentFeatures:
    """Pooled local and global feature vectors to be aligned."""
    local: np.ndarray
    global_: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.local, dtype=np.float64).ravel()
        b = np.asarray(self.global_, dtype=np.float64).ravel()
        if a.shape != b.shape:
            raise ValueError("alignment features must have equal length")
        if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
            raise ValueError("alignment features must have nonzero norm")
        object.__setattr__(self, "local", a)
        object.__setattr__(self, "global_", b)


def _check_pair(pred, target):
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs target {y.shape}")
    return p.ravel(), y.ravel()


def bce_loss(pred, target):
    """Mean binary cross-entropy; returns (value, gradient wrt pred)."""
    p, y = _check_pair(pred, target)
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = p.size
    value = float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))
    grad = (p - y) / (p * (1 - p)) / n
    return value, grad.reshape(np.shape(pred))


def dice_loss(pred, target, smoothing: float = 1.0):
    """Soft Dice loss 1 - (2*sum(p*y)+eps)/(sum(p)+sum(y)+eps)."""
    p, y = _check_pair(pred, target)
    num = 2.0 * np.dot(p, y) + smoothing
    den = p.sum() + y.sum() + smoothing
    value = float(1.0 - num / den)
    grad = -(2.0 * y * den - num) / den ** 2
    return value, grad.reshape(np.shape(pred))


def focal_loss(pred, target, gamma: float = 2.0):
    """Mean focal loss -(1-p_t)^gamma * log(p_t); reduces to BCE at gamma 0."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    p, y = _check_pair(pred, target)
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = p.size
    pt = np.where(y == 1.0, p, 1.0 - p)
    one_minus = 1.0 - pt
    value = float(np.mean(-(one_minus ** gamma) * np.log(pt)))
    # d/dpt of the per-element loss, with the product-rule term vanishing
    # identically at gamma = 0
    if gamma == 0.0:
        dpt = -1.0 / pt
    else:
        dpt = gamma * one_minus ** (gamma - 1.0) * np.log(pt) - one_minus ** gamma / pt
    grad = dpt * np.where(y == 1.0, 1.0, -1.0) / n
    return value, grad.reshape(np.shape(pred))


def alignment_loss(features: AlignmentFeatures):
    """One minus cosine similarity; gradient taken wrt the local vector."""
    a, b = features.local, features.global_
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cos = float(np.dot(a, b) / (na * nb))
    value = 1.0 - cos
    grad = -(b / (na * nb) - np.dot(a, b) * a / (na ** 3 * nb))
    return value, grad


def total_loss(pred, target, features: AlignmentFeatures,
               weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of the BCE/Dice/focal terms plus the alignment term."""
    seg = (weights.lambda_bce * bce_loss(pred, target)[0]
           + weights.lambda_dice * dice_loss(pred, target, weights.dice_smoothing)[0]
           + weights.lambda_focal * focal_loss(pred, target, weights.focal_gamma)[0])
    return seg + weights.omega_align * alignment_loss(features)[0]
