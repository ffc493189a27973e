"""IDX (MNIST-style) binary file ingestion.

Big-endian headers: images carry magic 0x00000803 and [count, rows, cols];
labels carry magic 0x00000801 and [count]. Pixel bytes are scaled to [0, 1].
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .fedlearn import Dataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_idx_images(path) -> np.ndarray:
    """N x rows x cols float array in [0, 1]."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated IDX image header")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGES_MAGIC:
        raise FormatError(f"{path}: bad IDX image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols,
                           offset=16)
    return pixels.reshape(count, rows, cols).astype(float) / 255.0


def load_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated IDX label header")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABELS_MAGIC:
        raise FormatError(f"{path}: bad IDX label magic 0x{magic:08x}")
    if len(raw) < 8 + count:
        raise FormatError(f"{path}: expected {8 + count} bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8).astype(
        np.int64
    )


def load_idx_dataset(images_path, labels_path) -> Dataset:
    """Flattened image dataset paired with its labels."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    return Dataset(images.reshape(images.shape[0], -1), labels)
