"""Minimal VAST tensor writer.

Layout: magic "VAST", version 0x01, dtype 0x01 (float32), ndim byte, one
zero pad byte, ndim u64 little-endian dims, then the row-major float32
little-endian payload. Total size 8 + 8*ndim + 4*count bytes.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"VAST"
VERSION = 1
DTYPE_F32 = 1


class VastWriteError(ValueError):
    pass


def encode_tensor(array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype="<f4")
    if data.ndim < 1 or data.ndim > 8:
        raise VastWriteError(f"ndim {data.ndim} outside 1..8")
    if not np.isfinite(data).all():
        raise VastWriteError("refusing to write non-finite element")
    header = MAGIC + bytes([VERSION, DTYPE_F32, data.ndim, 0])
    dims = b"".join(struct.pack("<Q", d) for d in data.shape)
    return header + dims + data.tobytes()


def write_tensor_file(array: np.ndarray, path) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    blob = encode_tensor(array)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
