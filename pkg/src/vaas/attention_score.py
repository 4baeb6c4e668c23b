"""Global anomaly scoring from attention deviation.

Aggregates an attention stack into a per-pixel received-attention map,
summarises it, calibrates reference statistics over an authentic set, and
scores |mu - mu_ref| / sigma_ref with a robust percentile normalisation
into [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .providers import FeatureBundle
from .resample import bilinear_resize

SIGMA_FLOOR = 1e-6


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class AttentionMap:
    values: np.ndarray       # [H, W], non-negative
    source_grid: tuple       # token grid before resampling


@dataclass(frozen=True)
class AttentionSummary:
    mu: float
    sigma: float


@dataclass(frozen=True)
class ReferenceStats:
    mu_ref: float
    sigma_ref: float
    raw_p01: float
    raw_p99: float
    n_samples: int


@dataclass(frozen=True)
class GlobalScore:
    raw: float
    normalised: float


def aggregate_attention(bundle: FeatureBundle, last_k: int = 4) -> AttentionMap:
    """Average the last k layers over layers and heads, take per-token
    received attention (column mean), and resample to image resolution.

    A leading global token (T = grid product + 1) is dropped before
    aggregation.
    """
    if last_k < 1:
        raise ValueError("last_k must be >= 1")
    att = np.asarray(bundle.attention, dtype=np.float64)
    layers = att.shape[0]
    avg = att[layers - min(last_k, layers):].mean(axis=(0, 1))  # T x T
    gr, gc = bundle.token_grid
    t = avg.shape[0]
    if t == gr * gc + 1:
        avg = avg[1:, 1:]
    elif t != gr * gc:
        raise ValueError(
            f"token count {t} does not match grid {bundle.token_grid} "
            "(with or without a global token)")
    received = avg.mean(axis=0)  # column mean over source tokens
    grid_map = received.reshape(gr, gc)
    return AttentionMap(values=bilinear_resize(grid_map, bundle.image_size),
                        source_grid=(gr, gc))


def summarise(amap: AttentionMap) -> AttentionSummary:
    values = np.asarray(amap.values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty attention map")
    mu = float(values.mean())
    sigma = float(values.std())  # population form
    return AttentionSummary(mu=mu, sigma=sigma)


def nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile on an ascending-sorted sequence."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty sequence")
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(sorted_values[min(rank, n) - 1])


def calibrate(summaries: Sequence[AttentionSummary]) -> ReferenceStats:
    """Fit reference statistics from authentic-sample summaries.

    mu_ref / sigma_ref are the mean and population std of the per-sample
    means; a second pass records the 1st/99th nearest-rank percentiles of
    the raw scores over the calibration set itself.
    """
    if len(summaries) < 2:
        raise CalibrationError(
            f"need >= 2 authentic samples to calibrate, got {len(summaries)}")
    mus = np.array([s.mu for s in summaries], dtype=np.float64)
    mu_ref = float(mus.mean())
    sigma_ref = float(mus.std())
    if sigma_ref < SIGMA_FLOOR:
        raise CalibrationError(
            f"degenerate calibration set: sigma_ref {sigma_ref:.3e} "
            f"below floor {SIGMA_FLOOR}")
    raws = np.sort(np.abs(mus - mu_ref) / sigma_ref)
    return ReferenceStats(
        mu_ref=mu_ref,
        sigma_ref=sigma_ref,
        raw_p01=nearest_rank(raws, 1.0),
        raw_p99=nearest_rank(raws, 99.0),
        n_samples=len(summaries),
    )


def score_global(summary: AttentionSummary, ref: ReferenceStats) -> GlobalScore:
    raw = abs(summary.mu - ref.mu_ref) / ref.sigma_ref
    span = ref.raw_p99 - ref.raw_p01
    if span == 0.0:
        normalised = 0.0 if raw <= ref.raw_p01 else 1.0
    else:
        normalised = min(max((raw - ref.raw_p01) / span, 0.0), 1.0)
    return GlobalScore(raw=raw, normalised=normalised)


def save_reference_stats(ref: ReferenceStats, path) -> None:
    doc = {"mu_ref": ref.mu_ref, "sigma_ref": ref.sigma_ref,
           "raw_p01": ref.raw_p01, "raw_p99": ref.raw_p99,
           "n_samples": ref.n_samples}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_reference_stats(path) -> ReferenceStats:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        ref = ReferenceStats(
            mu_ref=float(doc["mu_ref"]), sigma_ref=float(doc["sigma_ref"]),
            raw_p01=float(doc["raw_p01"]), raw_p99=float(doc["raw_p99"]),
            n_samples=int(doc["n_samples"]))
    except (KeyError, TypeError, ValueError) as e:
        raise CalibrationError(f"invalid reference stats file {path}: {e}") from e
    if ref.sigma_ref <= 0 or ref.raw_p01 > ref.raw_p99 or ref.n_samples < 2:
        raise CalibrationError(f"invalid reference stats in {path}")
    return ref
