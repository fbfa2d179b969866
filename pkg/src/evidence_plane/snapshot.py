"""Binary snapshots of trained networks.

Little-endian container::

    4 bytes   magic  b"SLNN" (dense) | b"SLSN" (spiking)
    u16       format version
    u16       number of layer dimensions L
    u32 * L   layer_dims
    SLSN only: f64 leak | f64 threshold | u32 time_steps | f64 surrogate_slope | u64 encode_seed
    per layer: f64 weights (row-major, out x in), then f64 biases for SLNN only
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import IngestionError, TruncatedFileError
from .models import SNNConfig
from .nn.dense import DenseNetwork
from .nn.spiking import SpikingNetwork

logger = logging.getLogger(__name__)

DENSE_MAGIC = b"SLNN"
SPIKING_MAGIC = b"SLSN"
FORMAT_VERSION = 1
_SNN_HEADER = struct.Struct("<ddIdQ")

Network = Union[DenseNetwork, SpikingNetwork]


def snapshot_suffix(net: Network) -> str:
    return ".slsn" if isinstance(net, SpikingNetwork) else ".slnn"


def save_snapshot(net: Network, path: Path) -> Path:
    path = Path(path)
    spiking = isinstance(net, SpikingNetwork)
    dims = tuple(int(d) for d in net.layer_dims)
    chunks = [
        SPIKING_MAGIC if spiking else DENSE_MAGIC,
        struct.pack("<HH", FORMAT_VERSION, len(dims)),
        struct.pack(f"<{len(dims)}I", *dims),
    ]
    if spiking:
        cfg = net.config
        chunks.append(
            _SNN_HEADER.pack(
                cfg.leak, cfg.threshold, cfg.time_steps, cfg.surrogate_slope, cfg.encode_seed
            )
        )
    for index, w in enumerate(net.weights):
        chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        if not spiking:
            chunks.append(np.ascontiguousarray(net.biases[index], dtype="<f8").tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    logger.debug("Saved %s snapshot %s (%s)", "spiking" if spiking else "dense", path, dims)
    return path


class _Reader:
    def __init__(self, raw: bytes, path: Path):
        self.raw = raw
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.raw):
            raise TruncatedFileError(f"{self.path}: snapshot ends early at byte {len(self.raw)}")
        chunk = self.raw[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.take(8 * count), dtype="<f8").reshape(shape).astype(np.float64)


def load_snapshot(path: Path) -> Network:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IngestionError(f"cannot read snapshot {path}: {e}") from e
    reader = _Reader(raw, path)
    magic = reader.take(4)
    if magic not in (DENSE_MAGIC, SPIKING_MAGIC):
        raise IngestionError(f"{path}: not a network snapshot (magic {magic!r})")
    version, n_dims = reader.unpack("<HH")
    if version != FORMAT_VERSION:
        raise IngestionError(f"{path}: unsupported snapshot version {version}")
    dims = reader.unpack(f"<{n_dims}I")
    config = None
    if magic == SPIKING_MAGIC:
        leak, threshold, time_steps, slope, encode_seed = reader.unpack(_SNN_HEADER.format)
        config = SNNConfig(
            leak=leak,
            threshold=threshold,
            time_steps=time_steps,
            surrogate_slope=slope,
            encode_seed=encode_seed,
        )
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(reader.array((fan_out, fan_in)))
        if config is None:
            biases.append(reader.array((fan_out,)))
    if reader.offset != len(reader.raw):
        raise IngestionError(f"{path}: {len(reader.raw) - reader.offset} trailing bytes")
    if config is None:
        return DenseNetwork(tuple(dims), weights, biases)
    return SpikingNetwork(tuple(dims), weights, config)
