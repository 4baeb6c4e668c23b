"""Run the ViT / SegFormer backbones over an image directory and dump
attention + patch-embedding tensors in VAST format with a manifest the
scoring engine can consume directly."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .vast import write_tensor_file

log = logging.getLogger("vaas_exporter")

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tiff", ".webp")

# standard large-corpus channel statistics used by both backbones
NORM_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
NORM_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

ROW_SUM_TOL = 1e-4


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportConfig:
    input_dir: Path
    out_dir: Path
    vit_model: str = "google/vit-base-patch16-224-in21k"
    segformer_model: str = "nvidia/segformer-b1-finetuned-ade-512-512"
    image_size: int = 224
    last_k: int = 4
    patch_size: int = 32
    embed_dim: int = 256
    stage: int = 4              # SegFormer encoder stage feeding embeddings
    device: str = "cpu"
    pretrained: bool = False    # fall back to config-initialised weights
    seed: int = 0
    label: str = "authentic"

    def __post_init__(self):
        if self.image_size % self.patch_size != 0:
            raise ValueError("image_size must be divisible by patch_size")
        if self.last_k < 1:
            raise ValueError("last_k must be >= 1")
        if not 1 <= self.stage <= 4:
            raise ValueError("stage must be in 1..4")
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "out_dir", Path(self.out_dir))


def load_backbones(cfg: ExportConfig):
    """Instantiate both encoders, pretrained when requested and reachable,
    otherwise config-initialised (deterministic via the export seed)."""
    from transformers import (SegformerConfig, SegformerModel, ViTConfig,
                              ViTModel)
    torch.manual_seed(cfg.seed)
    if cfg.pretrained:
        try:
            vit = ViTModel.from_pretrained(cfg.vit_model,
                                           attn_implementation="eager")
            seg = SegformerModel.from_pretrained(cfg.segformer_model)
        except Exception as e:  # hub unreachable, missing cache, ...
            log.warning("pretrained weights unavailable (%s); "
                        "using config-initialised weights", e)
            vit = seg = None
    else:
        vit = seg = None
    if vit is None:
        vit = ViTModel(ViTConfig(attn_implementation="eager"))
        seg = SegformerModel(SegformerConfig(
            hidden_sizes=[64, 128, 320, 512], depths=[2, 2, 2, 2]))
    vit.eval().to(cfg.device)
    seg.eval().to(cfg.device)
    return vit, seg


def preprocess(path: Path, cfg: ExportConfig) -> torch.Tensor:
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((cfg.image_size, cfg.image_size),
                                        Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - NORM_MEAN) / NORM_STD
    return torch.from_numpy(arr.transpose(2, 0, 1))[None].to(cfg.device)


def extract_attention(vit, pixels: torch.Tensor, cfg: ExportConfig) -> np.ndarray:
    with torch.no_grad():
        out = vit(pixels, output_attentions=True)
    stack = torch.stack(out.attentions[-cfg.last_k:], dim=0)  # [L,1,H,T,T]
    att = stack[:, 0].cpu().numpy().astype(np.float32)        # [L,H,T,T]
    grid = cfg.image_size // vit.config.patch_size
    expected_t = grid * grid + 1
    if att.shape[2] != expected_t or att.shape[3] != expected_t:
        raise ExportError(
            f"attention token count {att.shape[2]} != expected {expected_t}")
    row_err = np.abs(att.sum(axis=3) - 1.0).max()
    if row_err > ROW_SUM_TOL:
        raise ExportError(f"attention rows deviate from 1 by {row_err:.2e}")
    return att


def extract_embeddings(seg, pixels: torch.Tensor, cfg: ExportConfig) -> np.ndarray:
    with torch.no_grad():
        out = seg(pixels, output_hidden_states=True)
    feats = out.hidden_states[cfg.stage - 1][0]               # [C, h, w]
    grid = cfg.image_size // cfg.patch_size
    pooled = torch.nn.functional.adaptive_avg_pool2d(feats[None], grid)[0]
    emb = pooled.reshape(pooled.shape[0], -1).T.cpu().numpy()  # [M, C]
    channels = emb.shape[1]
    if channels < cfg.embed_dim:
        raise ExportError(
            f"stage {cfg.stage} provides {channels} channels < embed_dim "
            f"{cfg.embed_dim}; pick a deeper stage")
    emb = emb[:, :cfg.embed_dim].astype(np.float32)            # truncate
    expected = (grid * grid, cfg.embed_dim)
    if emb.shape != expected:
        raise ExportError(f"embeddings shape {emb.shape} != {expected}")
    return emb


def export_features(cfg: ExportConfig) -> Path:
    """Process every readable image; returns the manifest path."""
    images = sorted(p for p in cfg.input_dir.iterdir()
                    if p.suffix.lower() in IMAGE_EXTENSIONS)
    if not images:
        raise ExportError(f"no images found in {cfg.input_dir}")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "tensors").mkdir(exist_ok=True)
    vit, seg = load_backbones(cfg)
    samples = []
    for path in images:
        sid = path.stem
        try:
            pixels = preprocess(path, cfg)
        except (OSError, ValueError) as e:
            log.warning("skipping unreadable image %s: %s", path, e)
            continue
        att = extract_attention(vit, pixels, cfg)
        emb = extract_embeddings(seg, pixels, cfg)
        att_rel = f"tensors/{sid}_att.vast"
        emb_rel = f"tensors/{sid}_emb.vast"
        write_tensor_file(att, cfg.out_dir / att_rel)
        write_tensor_file(emb, cfg.out_dir / emb_rel)
        samples.append({
            "id": sid,
            "image_path": os.path.relpath(path, cfg.out_dir),
            "label": cfg.label,
            "attention_path": att_rel,
            "embeddings_path": emb_rel,
        })
    if not samples:
        raise ExportError("every input image was unreadable")
    manifest = {
        "meta": {
            "image_size": [cfg.image_size, cfg.image_size],
            "patch_size": cfg.patch_size,
            "embed_dim": cfg.embed_dim,
        },
        "samples": samples,
    }
    manifest_path = cfg.out_dir / "manifest.json"
    fd, tmp = tempfile.mkstemp(dir=cfg.out_dir, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    os.replace(tmp, manifest_path)
    log.info("exported %d samples to %s", len(samples), cfg.out_dir)
    return manifest_path
