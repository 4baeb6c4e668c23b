"""Pixel-level localisation metrics, sample-level detection, dataset reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .attention_score import (ReferenceStats, aggregate_attention, score_global,
                              summarise)
from .fusion import FusionConfig, fuse
from .images import load_mask
from .patch_consistency import PatchGridConfig, local_score, resize_mask_nn
from .providers import ToyConfig, fetch_features
from .tensor_io import DatasetManifest


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def confusion(pred_mask: np.ndarray, gt_mask: np.ndarray) -> ConfusionCounts:
    """Elementwise confusion counts for two binary masks of equal shape."""
    p = np.asarray(pred_mask)
    g = np.asarray(gt_mask)
    if p.shape != g.shape:
        raise EvaluationError(f"shape mismatch: {p.shape} vs {g.shape}")
    for name, m in (("pred", p), ("gt", g)):
        if not np.all(np.isin(np.unique(m), (0, 1))):
            raise EvaluationError(f"{name} mask is not binary")
    p = p.astype(bool)
    g = g.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
    )


def metrics(c: ConfusionCounts):
    """(precision, recall, f1, iou).

    Convention for empty cases: no positives anywhere (tp=fp=fn=0) counts
    as a correct all-negative call and scores 1.0 on every metric; positives
    exist but tp=0 scores 0.0 on the undefined ratios.
    """
    if c.tp + c.fp + c.fn == 0:
        return 1.0, 1.0, 1.0, 1.0
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    iou = c.tp / (c.tp + c.fp + c.fn)
    return precision, recall, f1, iou


def detection_auc(scores: Sequence) -> float:
    """Rank AUC: probability a tampered sample outscores an authentic one,
    ties counting one half. Input: iterable of (score, label)."""
    pos = [float(s) for s, lab in scores if lab == "tampered"]
    neg = [float(s) for s, lab in scores if lab == "authentic"]
    if not pos or not neg:
        raise EvaluationError("detection AUC needs both labels present")
    neg_sorted = np.sort(np.array(neg))
    total = 0.0
    for s in pos:
        lo = np.searchsorted(neg_sorted, s, side="left")
        hi = np.searchsorted(neg_sorted, s, side="right")
        total += lo + 0.5 * (hi - lo)
    return total / (len(pos) * len(neg))


@dataclass(frozen=True)
class SampleResult:
    id: str
    label: str
    s_f_raw: float
    s_f: float
    s_p: float
    s_h: float
    precision: float
    recall: float
    f1: float
    iou: float
    counts: ConfusionCounts


@dataclass(frozen=True)
class EvalReport:
    per_sample: tuple
    micro: tuple            # (precision, recall, f1, iou) from summed counts
    macro: tuple            # per-sample means of the same metrics
    total_counts: ConfusionCounts
    detection_precision: float
    detection_recall: float
    detection_f1: float
    detection_auc: Optional[float]
    threshold: float
    config: dict = field(default_factory=dict)


def _ground_truth(manifest: DatasetManifest, entry, image_size) -> np.ndarray:
    if entry.label == "tampered":
        if not entry.mask_path:
            raise EvaluationError(
                f"tampered sample {entry.id!r} has no mask_path")
        gt = load_mask(manifest.resolve(entry.mask_path))
        if gt.shape != tuple(image_size):
            gt = resize_mask_nn(gt, image_size)
        return gt
    return np.zeros(image_size)


def evaluate_dataset(manifest: DatasetManifest, ref: ReferenceStats,
                     provider_mode: str = "toy",
                     toy_cfg: ToyConfig = ToyConfig(),
                     patch_cfg: PatchGridConfig = PatchGridConfig(),
                     fusion_cfg: FusionConfig = FusionConfig(),
                     threshold: float = 0.5,
                     last_k: int = 4) -> EvalReport:
    """Score every manifest sample and aggregate localisation + detection."""
    per_sample = []
    total = ConfusionCounts(0, 0, 0, 0)
    det_tp = det_fp = det_fn = 0
    for entry in manifest.samples:
        bundle = fetch_features(manifest, entry.id, provider_mode, toy_cfg)
        gscore = score_global(summarise(aggregate_attention(bundle, last_k)), ref)
        local = local_score(bundle.embeddings, bundle.grid, patch_cfg,
                            bundle.image_size)
        s_h = fuse(gscore.normalised, local.s_p, fusion_cfg)
        gt = _ground_truth(manifest, entry, bundle.image_size)
        counts = confusion(local.mask, gt)
        precision, recall, f1, iou = metrics(counts)
        total = total + counts
        pred_tampered = s_h >= threshold
        if pred_tampered and entry.label == "tampered":
            det_tp += 1
        elif pred_tampered:
            det_fp += 1
        elif entry.label == "tampered":
            det_fn += 1
        per_sample.append(SampleResult(
            id=entry.id, label=entry.label, s_f_raw=gscore.raw,
            s_f=gscore.normalised, s_p=local.s_p, s_h=s_h,
            precision=precision, recall=recall, f1=f1, iou=iou, counts=counts))

    if not per_sample:
        raise EvaluationError("manifest has no samples")
    micro = metrics(total)
    macro = tuple(
        float(np.mean([getattr(r, name) for r in per_sample]))
        for name in ("precision", "recall", "f1", "iou"))
    if det_tp + det_fp + det_fn == 0:
        det_p = det_r = det_f1 = 1.0
    else:
        det_p = det_tp / (det_tp + det_fp) if det_tp + det_fp else 0.0
        det_r = det_tp / (det_tp + det_fn) if det_tp + det_fn else 0.0
        det_f1 = (2 * det_p * det_r / (det_p + det_r)) if det_p + det_r else 0.0
    labels = {r.label for r in per_sample}
    auc = (detection_auc([(r.s_h, r.label) for r in per_sample])
           if labels == {"authentic", "tampered"} else None)
    return EvalReport(
        per_sample=tuple(per_sample), micro=micro, macro=macro,
        total_counts=total, detection_precision=det_p, detection_recall=det_r,
        detection_f1=det_f1, detection_auc=auc, threshold=threshold,
        config={
            "provider_mode": provider_mode,
            "fusion_mode": fusion_cfg.mode,
            "alpha": fusion_cfg.alpha,
            "patch_size": patch_cfg.patch_size,
            "neighbourhood": patch_cfg.neighbourhood,
            "binarise_threshold": patch_cfg.binarise_threshold,
            "decision_threshold": threshold,
            "last_k": last_k,
        })


def report_to_dict(report: EvalReport) -> dict:
    names = ("precision", "recall", "f1", "iou")
    return {
        "config": report.config,
        "aggregate": {
            "micro": dict(zip(names, report.micro)),
            "macro": dict(zip(names, report.macro)),
            "counts": {"tp": report.total_counts.tp, "fp": report.total_counts.fp,
                       "fn": report.total_counts.fn, "tn": report.total_counts.tn},
        },
        "detection": {
            "precision": report.detection_precision,
            "recall": report.detection_recall,
            "f1": report.detection_f1,
            "auc": report.detection_auc,
            "threshold": report.threshold,
        },
        "per_sample": [
            {"id": r.id, "label": r.label, "s_f_raw": r.s_f_raw, "s_f": r.s_f,
             "s_p": r.s_p, "s_h": r.s_h, "precision": r.precision,
             "recall": r.recall, "f1": r.f1, "iou": r.iou}
            for r in report.per_sample
        ],
    }


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, indent=2)
        f.write("\n")


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "label", "s_f", "s_p", "s_h",
                         "precision", "recall", "f1", "iou"])
        for r in report.per_sample:
            writer.writerow([r.id, r.label, f"{r.s_f:.9f}", f"{r.s_p:.9f}",
                             f"{r.s_h:.9f}", f"{r.precision:.6f}",
                             f"{r.recall:.6f}", f"{r.f1:.6f}", f"{r.iou:.6f}"])
