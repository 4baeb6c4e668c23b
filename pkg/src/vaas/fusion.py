"""Hybrid score fusion and the alpha-sweep harness."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

MODES = ("weighted", "harmonic")


@dataclass(frozen=True)
class FusionConfig:
    mode: str = "weighted"
    alpha: float = 0.6
    epsilon_h: float = 1e-9

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.epsilon_h <= 0:
            raise ValueError("epsilon_h must be positive")


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    s_f_raw: float
    s_f: float
    s_p: float
    s_h: float
    config: FusionConfig


def fuse_weighted(s_f: float, s_p: float, alpha: float) -> float:
    """Convex combination alpha * s_f + (1 - alpha) * s_p.

    Equal inputs short-circuit so the fixed point fuse(s, s) == s holds
    exactly in floating point for every alpha.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if s_f == s_p:
        return s_f
    return alpha * s_f + (1.0 - alpha) * s_p


def fuse_harmonic(s_f: float, s_p: float, epsilon: float = 1e-9) -> float:
    """Harmonic mean 2*s_f*s_p / (s_f + s_p); zero when both scores vanish.

    Equal inputs short-circuit so fuse(s, s) == s is floating-point exact.
    """
    if s_f + s_p < epsilon:
        return 0.0
    if s_f == s_p:
        return s_f
    return 2.0 * s_f * s_p / (s_f + s_p)


def fuse(s_f: float, s_p: float, cfg: FusionConfig) -> float:
    if cfg.mode == "weighted":
        return fuse_weighted(s_f, s_p, cfg.alpha)
    return fuse_harmonic(s_f, s_p, cfg.epsilon_h)


# --- alpha sweep -------------------------------------------------------------

@dataclass(frozen=True)
class SweepSample:
    """Precomputed per-sample inputs: the alpha-independent pieces."""
    s_f: float
    s_p: float
    label: str                       # "authentic" | "tampered"
    iou: Optional[float] = None      # localisation IoU, when a mask exists


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    mode: str
    f1: float
    iou: Optional[float]
    precision: float
    recall: float


def alpha_grid(alpha_min: float, alpha_max: float, alpha_step: float):
    if alpha_step <= 0:
        raise ValueError("alpha_step must be positive")
    if alpha_min > alpha_max:
        raise ValueError("alpha_min must not exceed alpha_max")
    grid = []
    i = 0
    while True:
        a = alpha_min + i * alpha_step
        if a > alpha_max + 1e-12:
            break
        grid.append(min(a, alpha_max))
        i += 1
    return grid


def _detection_prf(samples: Sequence[SweepSample], hybrid: Sequence[float],
                   threshold: float):
    tp = fp = fn = 0
    for s, h in zip(samples, hybrid):
        pred = h >= threshold
        actual = s.label == "tampered"
        if pred and actual:
            tp += 1
        elif pred and not actual:
            fp += 1
        elif actual:
            fn += 1
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def sweep_alpha(samples: Sequence[SweepSample], alpha_min: float,
                alpha_max: float, alpha_step: float,
                modes: Sequence[str] = MODES,
                threshold: float = 0.5,
                epsilon_h: float = 1e-9):
    """Recompute hybrid scores and detection metrics over an alpha grid.

    Harmonic fusion ignores alpha; its rows repeat for table alignment.
    """
    if not samples:
        raise ValueError("sweep needs at least one sample record")
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown fusion mode {m!r}")
    ious = [s.iou for s in samples if s.iou is not None]
    mean_iou = sum(ious) / len(ious) if ious else None
    rows = []
    for mode in modes:
        for a in alpha_grid(alpha_min, alpha_max, alpha_step):
            if mode == "weighted":
                hybrid = [fuse_weighted(s.s_f, s.s_p, a) for s in samples]
            else:
                hybrid = [fuse_harmonic(s.s_f, s.s_p, epsilon_h) for s in samples]
            p, r, f1 = _detection_prf(samples, hybrid, threshold)
            rows.append(SweepRow(alpha=a, mode=mode, f1=f1, iou=mean_iou,
                                 precision=p, recall=r))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["alpha", "mode", "f1", "iou", "precision", "recall"])
        for row in rows:
            writer.writerow([
                f"{row.alpha:.6g}", row.mode, f"{row.f1:.6f}",
                "" if row.iou is None else f"{row.iou:.6f}",
                f"{row.precision:.6f}", f"{row.recall:.6f}",
            ])
