"""MNIST ingestion from IDX files (optionally gzip-compressed).

IDX layout (big-endian)::

    images: u32 magic 0x00000803 | u32 n | u32 rows | u32 cols | u8 pixels
    labels: u32 magic 0x00000801 | u32 n | u8 labels
"""

from __future__ import annotations

import gzip
import logging
import struct
from pathlib import Path

import numpy as np

from ..errors import CountMismatchError, IdxMagicError, IngestionError, TruncatedFileError
from .base import LabeledDataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
MNIST_CLASSES = 10


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _parse_header(raw: bytes, path: Path, magic: int, n_dims: int) -> tuple[int, ...]:
    header_size = 4 * (1 + n_dims)
    if len(raw) < header_size:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes is shorter than the IDX header")
    found, *dims = struct.unpack(f">I{n_dims}I", raw[:header_size])
    if found != magic:
        raise IdxMagicError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    return tuple(dims)


def read_idx_images(path: Path) -> np.ndarray:
    """``(n, rows, cols)`` uint8 array."""
    raw = _read_bytes(path)
    n, rows, cols = _parse_header(raw, path, IMAGE_MAGIC, 3)
    payload = raw[16:]
    expected = n * rows * cols
    if len(payload) < expected:
        raise TruncatedFileError(f"{path}: {len(payload)} pixel bytes, header announces {expected}")
    return np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(n, rows, cols)


def read_idx_labels(path: Path) -> np.ndarray:
    raw = _read_bytes(path)
    (n,) = _parse_header(raw, path, LABEL_MAGIC, 1)
    payload = raw[8:]
    if len(payload) < n:
        raise TruncatedFileError(f"{path}: {len(payload)} label bytes, header announces {n}")
    return np.frombuffer(payload, dtype=np.uint8, count=n)


def load_mnist(image_path: Path, label_path: Path) -> LabeledDataset:
    """Load one MNIST split with pixels scaled to ``[0, 1]``."""
    images = read_idx_images(image_path)
    labels = read_idx_labels(label_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{image_path} holds {images.shape[0]} images but {label_path} holds {labels.shape[0]} labels"
        )
    if labels.size and labels.max() >= MNIST_CLASSES:
        raise IngestionError(f"{label_path}: label {labels.max()} outside 0-9")
    logger.info("Loaded %d MNIST images of %dx%d from %s", *images.shape, image_path)
    return LabeledDataset(
        features=images.reshape(images.shape[0], -1).astype(np.float64) / 255.0,
        labels=labels.astype(np.int64),
        class_count=MNIST_CLASSES,
        name="mnist",
    )
