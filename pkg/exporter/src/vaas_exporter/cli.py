"""Command-line front end for the feature exporter."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import ExportConfig, ExportError, export_features


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vaas-export",
        description="Export backbone attention and patch embeddings as "
                    "VAST tensors plus a scoring-engine manifest")
    p.add_argument("--input-dir", required=True, help="directory of images")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--vit-model",
                   default="google/vit-base-patch16-224-in21k")
    p.add_argument("--segformer-model",
                   default="nvidia/segformer-b1-finetuned-ade-512-512")
    p.add_argument("--image-size", type=int, default=224)
    p.add_argument("--last-k", type=int, default=4,
                   help="attention layers to keep")
    p.add_argument("--patch-size", type=int, default=32)
    p.add_argument("--embed-dim", type=int, default=256)
    p.add_argument("--stage", type=int, default=4, choices=(1, 2, 3, 4),
                   help="SegFormer encoder stage feeding the embeddings")
    p.add_argument("--device", default="cpu")
    p.add_argument("--pretrained", action="store_true",
                   help="load published weights (falls back to "
                        "config-initialised weights if unavailable)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for config-initialised weights")
    p.add_argument("--label", default="authentic",
                   choices=("authentic", "tampered"),
                   help="label recorded for every exported sample")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = ExportConfig(
            input_dir=args.input_dir, out_dir=args.out_dir,
            vit_model=args.vit_model, segformer_model=args.segformer_model,
            image_size=args.image_size, last_k=args.last_k,
            patch_size=args.patch_size, embed_dim=args.embed_dim,
            stage=args.stage, device=args.device, pretrained=args.pretrained,
            seed=args.seed, label=args.label)
        path = export_features(cfg)
    except (ExportError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
