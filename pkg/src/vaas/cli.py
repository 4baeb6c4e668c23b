"""Command-line entry point: calibrate, score, evaluate, sweep, render,
make-synthetic, selfcheck.

Exit codes: 0 success, 1 validation error, 2 runtime/data error. Declared
output files are removed again if a command fails partway."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .attention_score import (CalibrationError, aggregate_attention, calibrate,
                              load_reference_stats, save_reference_stats,
                              score_global, summarise)
from .evaluation import (EvaluationError, confusion, evaluate_dataset, metrics,
                         write_report_csv, write_report_json)
from .fusion import FusionConfig, SweepSample, fuse, sweep_alpha, write_sweep_csv
from .images import load_image, load_mask
from .patch_consistency import PatchGridConfig, local_score, resize_mask_nn
from .providers import ProviderError, ToyConfig, fetch_features
from .render import render_composite
from .selfcheck import run_selfcheck
from .synthetic import build_synthetic_dataset
from .tensor_io import ManifestError, load_manifest


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--mode", choices=("toy", "file"), default="toy",
                   help="feature provider")
    p.add_argument("--seed", type=int, default=0, help="toy provider seed")
    p.add_argument("--tau", type=float, default=0.05,
                   help="toy attention temperature")
    p.add_argument("--last-k", type=int, default=4,
                   help="attention layers to aggregate")


def _add_scoring_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ref", required=True, help="reference stats JSON")
    p.add_argument("--fusion", choices=("weighted", "harmonic"),
                   default="weighted")
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="hybrid-score decision threshold")
    p.add_argument("--binarise-threshold", type=float, default=0.5,
                   help="local anomaly mask threshold")
    p.add_argument("--neighbourhood", choices=("4", "8"), default="8")
    p.add_argument("--no-clamp", action="store_true",
                   help="keep negative cosine similarities")


def _configs(args, meta):
    toy = ToyConfig(seed=args.seed, temperature=args.tau,
                    patch_size=meta.patch_size, embed_dim=meta.embed_dim)
    patch = PatchGridConfig(patch_size=meta.patch_size,
                            neighbourhood=args.neighbourhood,
                            clamp_negative_sim=not args.no_clamp,
                            binarise_threshold=args.binarise_threshold)
    fusion_cfg = FusionConfig(mode=args.fusion, alpha=args.alpha)
    return toy, patch, fusion_cfg


def _score_samples(manifest, ref, args):
    """Yield (entry, bundle, global score, local result, hybrid) per sample."""
    toy, patch, fusion_cfg = _configs(args, manifest.meta)
    for entry in manifest.samples:
        bundle = fetch_features(manifest, entry.id, args.mode, toy)
        gscore = score_global(
            summarise(aggregate_attention(bundle, args.last_k)), ref)
        local = local_score(bundle.embeddings, bundle.grid, patch,
                            bundle.image_size)
        s_h = fuse(gscore.normalised, local.s_p, fusion_cfg)
        yield entry, bundle, gscore, local, s_h


def cmd_calibrate(args) -> int:
    manifest = load_manifest(args.manifest)
    toy = ToyConfig(seed=args.seed, temperature=args.tau,
                    patch_size=manifest.meta.patch_size,
                    embed_dim=manifest.meta.embed_dim)
    authentic = [s for s in manifest.samples if s.label == "authentic"]
    if len(authentic) < 2:
        raise CliError(f"need >= 2 authentic samples, got {len(authentic)}")
    summaries = []
    for entry in authentic:
        bundle = fetch_features(manifest, entry.id, args.mode, toy)
        summaries.append(summarise(aggregate_attention(bundle, args.last_k)))
    ref = calibrate(summaries)
    with _cleanup_on_error([args.out]):
        save_reference_stats(ref, args.out)
    print(f"n_samples={ref.n_samples} mu_ref={ref.mu_ref:.9g} "
          f"sigma_ref={ref.sigma_ref:.9g}")
    return 0


def cmd_score(args) -> int:
    manifest = load_manifest(args.manifest)
    ref = load_reference_stats(args.ref)
    with _cleanup_on_error([args.out]):
        with open(args.out, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["id", "label", "s_f_raw", "s_f", "s_p", "s_h",
                             "mode", "alpha"])
            for entry, _, gscore, local, s_h in _score_samples(manifest, ref, args):
                writer.writerow([entry.id, entry.label, f"{gscore.raw:.9f}",
                                 f"{gscore.normalised:.9f}", f"{local.s_p:.9f}",
                                 f"{s_h:.9f}", args.fusion, f"{args.alpha:.6g}"])
    print(f"wrote {args.out} ({len(manifest.samples)} samples)")
    return 0


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    ref = load_reference_stats(args.ref)
    toy, patch, fusion_cfg = _configs(args, manifest.meta)
    report = evaluate_dataset(manifest, ref, provider_mode=args.mode,
                              toy_cfg=toy, patch_cfg=patch,
                              fusion_cfg=fusion_cfg, threshold=args.threshold,
                              last_k=args.last_k)
    outputs = [p for p in (args.out_json, args.out_csv) if p]
    with _cleanup_on_error(outputs):
        if args.out_json:
            write_report_json(report, args.out_json)
        if args.out_csv:
            write_report_csv(report, args.out_csv)
    p, r, f1, iou = report.micro
    print(f"micro precision={p:.4f} recall={r:.4f} f1={f1:.4f} iou={iou:.4f}")
    print(f"detection f1={report.detection_f1:.4f} "
          f"auc={'n/a' if report.detection_auc is None else format(report.detection_auc, '.4f')}")
    return 0


def cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    ref = load_reference_stats(args.ref)
    records = []
    for entry, bundle, gscore, local, _ in _score_samples(manifest, ref, args):
        iou = None
        if entry.label == "tampered" and entry.mask_path:
            gt = load_mask(manifest.resolve(entry.mask_path))
            if gt.shape != tuple(bundle.image_size):
                gt = resize_mask_nn(gt, bundle.image_size)
            iou = metrics(confusion(local.mask, gt))[3]
        records.append(SweepSample(s_f=gscore.normalised, s_p=local.s_p,
                                   label=entry.label, iou=iou))
    modes = (args.fusion,) if args.single_mode else ("weighted", "harmonic")
    rows = sweep_alpha(records, args.alpha_min, args.alpha_max, args.alpha_step,
                       modes=modes, threshold=args.threshold)
    with _cleanup_on_error([args.out]):
        write_sweep_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_render(args) -> int:
    manifest = load_manifest(args.manifest)
    ref = load_reference_stats(args.ref)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = set(args.id) if args.id else None
    rendered = 0
    for entry, bundle, gscore, local, s_h in _score_samples(manifest, ref, args):
        if wanted is not None and entry.id not in wanted:
            continue
        img = load_image(manifest.resolve(entry.image_path))
        gt = None
        if entry.mask_path:
            gt = load_mask(manifest.resolve(entry.mask_path))
            if gt.shape != tuple(bundle.image_size):
                gt = resize_mask_nn(gt, bundle.image_size)
        elif entry.label == "tampered":
            print(f"warning: sample {entry.id!r} has no mask, rendering N/A",
                  file=sys.stderr)
        amap = aggregate_attention(bundle, args.last_k).values
        composite = render_composite(img, gt, local.mask, local.map_fullres,
                                     amap, s_h, gscore.normalised, local.s_p)
        composite.save(out_dir / f"render_{entry.id}.png", format="PNG")
        rendered += 1
    if wanted is not None and rendered < len(wanted):
        raise CliError("one or more requested sample ids were not found")
    print(f"wrote {rendered} composites to {out_dir}")
    return 0


def cmd_make_synthetic(args) -> int:
    path = build_synthetic_dataset(args.out_dir, n_authentic=args.authentic,
                                   n_tampered=args.tampered, seed=args.seed)
    print(f"wrote {path}")
    return 0


def cmd_selfcheck(args) -> int:
    ok = run_selfcheck(grad_tol=args.grad_tol)
    return 0 if ok else 2


class _cleanup_on_error:
    """Remove declared output paths when the guarded block raises."""

    def __init__(self, paths):
        self.paths = [Path(p) for p in paths]

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.paths:
                p.unlink(missing_ok=True)
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaas",
        description="Hybrid global/local anomaly scoring for image forensics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit reference stats from authentic samples")
    _add_dataset_args(p)
    p.add_argument("--out", required=True, help="reference stats JSON output")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("score", help="write per-sample score CSV")
    _add_dataset_args(p)
    _add_scoring_args(p)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("evaluate", help="localisation + detection report")
    _add_dataset_args(p)
    _add_scoring_args(p)
    p.add_argument("--out-json", help="report JSON output")
    p.add_argument("--out-csv", help="per-sample CSV output")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("sweep", help="alpha sweep table")
    _add_dataset_args(p)
    _add_scoring_args(p)
    p.add_argument("--alpha-min", type=float, default=0.3)
    p.add_argument("--alpha-max", type=float, default=0.8)
    p.add_argument("--alpha-step", type=float, default=0.05)
    p.add_argument("--single-mode", action="store_true",
                   help="emit only the --fusion mode instead of both")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("render", help="six-panel composite images")
    _add_dataset_args(p)
    _add_scoring_args(p)
    p.add_argument("--id", action="append", help="sample id (repeatable; default all)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("make-synthetic", help="build the seeded synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--authentic", type=int, default=20)
    p.add_argument("--tampered", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(fn=cmd_make_synthetic)

    p = sub.add_parser("selfcheck", help="run the built-in oracle suites")
    p.add_argument("--grad-tol", type=float, default=1e-4,
                   help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (ManifestError, ProviderError, CalibrationError, EvaluationError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
