"""Bit-exact tensor file format and dataset manifest loading.

Tensor files: magic "VAST", version 0x01, dtype 0x01 (f32), ndim byte,
one zero pad byte (so the fixed header is 8 bytes), then ndim u64
little-endian dims, then the row-major little-endian f32 payload.
Total size is always 8 + 8*ndim + 4*prod(shape).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional, Sequence, Union

import numpy as np

MAGIC = b"VAST"
VERSION = 1
DTYPE_F32 = 1
MAX_NDIM = 8


class TensorFormatError(ValueError):
    pass


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Tensor:
    """Dense row-major f32 tensor; the interchange unit between modules."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return (self.shape == other.shape
                and self.data.tobytes() == other.data.tobytes())


def _validate_tensor(t: Tensor) -> None:
    if t.data.ndim < 1 or t.data.ndim > MAX_NDIM:
        raise TensorFormatError(f"ndim must be in 1..{MAX_NDIM}, got {t.data.ndim}")
    if any(d < 1 for d in t.shape):
        raise TensorFormatError(f"dimensions must be >= 1, got {t.shape}")
    if not np.isfinite(t.data).all():
        raise TensorFormatError("non-finite element in tensor payload")


def write_tensor(t: Tensor, destination: BinaryIO) -> int:
    """Serialise a tensor; returns the number of bytes written."""
    _validate_tensor(t)
    ndim = t.data.ndim
    header = MAGIC + bytes([VERSION, DTYPE_F32, ndim, 0])
    dims = struct.pack("<%dQ" % ndim, *t.shape)
    payload = t.data.astype("<f4", copy=False).tobytes()
    destination.write(header)
    destination.write(dims)
    destination.write(payload)
    return len(header) + len(dims) + len(payload)


def read_tensor(source: Union[bytes, BinaryIO]) -> Tensor:
    """Inverse of write_tensor; validates magic, version, dtype, finiteness."""
    strict = False
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
        strict = True
    header = source.read(8)
    if len(header) < 8 or header[:4] != MAGIC:
        raise TensorFormatError("not a VAST tensor (bad magic)")
    version, dtype, ndim, pad = header[4], header[5], header[6], header[7]
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise TensorFormatError(f"unsupported dtype code {dtype}")
    if ndim < 1 or ndim > MAX_NDIM:
        raise TensorFormatError(f"ndim {ndim} out of range 1..{MAX_NDIM}")
    if pad != 0:
        raise TensorFormatError("nonzero pad byte")
    dim_bytes = source.read(8 * ndim)
    if len(dim_bytes) != 8 * ndim:
        raise TensorFormatError("length mismatch (truncated dims)")
    shape = struct.unpack("<%dQ" % ndim, dim_bytes)
    if any(d < 1 for d in shape):
        raise TensorFormatError(f"dimensions must be >= 1, got {shape}")
    count = int(np.prod(shape))
    payload = source.read(4 * count)
    if len(payload) != 4 * count:
        raise TensorFormatError("length mismatch (truncated payload)")
    if strict and source.read(1):
        raise TensorFormatError("length mismatch (trailing bytes)")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape)
    if not np.isfinite(data).all():
        raise TensorFormatError("non-finite element in tensor payload")
    return Tensor(data)


def write_tensor_file(t: Tensor, path) -> int:
    with open(path, "wb") as f:
        return write_tensor(t, f)


def read_tensor_file(path) -> Tensor:
    with open(path, "rb") as f:
        return read_tensor(f)


# --- dataset manifests -------------------------------------------------------

LABELS = ("authentic", "tampered")


@dataclass(frozen=True)
class SampleEntry:
    id: str
    image_path: str
    label: str
    mask_path: Optional[str] = None
    attention_path: Optional[str] = None
    embeddings_path: Optional[str] = None


@dataclass(frozen=True)
class ManifestMeta:
    image_size: tuple  # (H, W)
    patch_size: int
    embed_dim: int


@dataclass(frozen=True)
class DatasetManifest:
    meta: ManifestMeta
    samples: tuple = field(default_factory=tuple)
    base_dir: Path = field(default_factory=Path)

    def sample(self, sample_id: str) -> SampleEntry:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise ManifestError(f"sample id not found: {sample_id!r}")

    def resolve(self, rel_path: str) -> Path:
        p = Path(rel_path)
        return p if p.is_absolute() else self.base_dir / p


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ManifestError(msg)


def parse_manifest(doc: dict, base_dir: Path = Path(".")) -> DatasetManifest:
    _require(isinstance(doc, dict), "manifest root must be an object")
    meta = doc.get("meta")
    _require(isinstance(meta, dict), "manifest missing meta object")
    size = meta.get("image_size")
    _require(isinstance(size, (list, tuple)) and len(size) == 2
             and all(isinstance(v, int) and v >= 1 for v in size),
             "meta.image_size must be [H, W] positive integers")
    patch = meta.get("patch_size")
    _require(isinstance(patch, int) and patch >= 1,
             "meta.patch_size must be a positive integer")
    _require(size[0] % patch == 0 and size[1] % patch == 0,
             f"image_size {tuple(size)} not divisible by patch_size {patch}")
    dim = meta.get("embed_dim")
    _require(isinstance(dim, int) and dim >= 1,
             "meta.embed_dim must be a positive integer")

    raw_samples = doc.get("samples")
    _require(isinstance(raw_samples, list), "manifest missing samples list")
    samples = []
    seen = set()
    for i, s in enumerate(raw_samples):
        _require(isinstance(s, dict), f"sample #{i} must be an object")
        sid = s.get("id")
        _require(isinstance(sid, str) and sid, f"sample #{i} missing id")
        _require(sid not in seen, f"duplicate sample id: {sid!r}")
        seen.add(sid)
        label = s.get("label")
        _require(label in LABELS,
                 f"sample {sid!r}: label must be one of {LABELS}, got {label!r}")
        img = s.get("image_path")
        _require(isinstance(img, str) and img, f"sample {sid!r} missing image_path")
        opt = {}
        for key in ("mask_path", "attention_path", "embeddings_path"):
            v = s.get(key)
            if v is not None:
                _require(isinstance(v, str) and v,
                         f"sample {sid!r}: {key} must be a non-empty string")
            opt[key] = v
        samples.append(SampleEntry(id=sid, image_path=img, label=label, **opt))

    return DatasetManifest(
        meta=ManifestMeta(image_size=(size[0], size[1]), patch_size=patch,
                          embed_dim=dim),
        samples=tuple(samples),
        base_dir=base_dir,
    )


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ManifestError(f"malformed JSON in {path}: {e}") from e
    return parse_manifest(doc, base_dir=path.parent)


def manifest_to_dict(m: DatasetManifest) -> dict:
    samples = []
    for s in m.samples:
        row = {"id": s.id, "image_path": s.image_path, "label": s.label}
        for key in ("mask_path", "attention_path", "embeddings_path"):
            v = getattr(s, key)
            if v is not None:
                row[key] = v
        samples.append(row)
    return {
        "meta": {
            "image_size": list(m.meta.image_size),
            "patch_size": m.meta.patch_size,
            "embed_dim": m.meta.embed_dim,
        },
        "samples": samples,
    }


def save_manifest(m: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest_to_dict(m), f, indent=2, sort_keys=False)
        f.write("\n")
