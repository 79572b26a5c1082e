"""Packed model files: header, per-layer checksum table, sequential payload.

Layout (little-endian, no padding except 4 alignment bytes after the layer
count, bringing the fixed header to 32 bytes):

    offset  size  field
    0       4     magic "DLYR"
    4       4     u32 version = 1
    8       4     u32 layer count N
    12      4     alignment padding (zero)
    16      8     u64 total payload bytes
    24      8     u64 generator seed
    32      12*N  table: { u64 size_bytes, u32 crc32 } per layer
    32+12N  ...   payloads concatenated in layer order, no padding

Payload bytes are a pure function of (seed, layer index), so packing is
reproducible bit for bit and any staging corruption is detectable by the
per-layer CRC-32.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..trace import ModelTrace

MAGIC = b"DLYR"
VERSION = 1
_HEADER = struct.Struct("<4sII4xQQ")
_RECORD = struct.Struct("<QI")
HEADER_BYTES = _HEADER.size
RECORD_BYTES = _RECORD.size

_CHUNK = 8 << 20  # generate/write payloads in 8 MB slices


class PackFormatError(ValueError):
    """Corrupt or mismatching packed model file."""


@dataclass(frozen=True)
class PackedLayer:
    size_bytes: int
    crc32: int
    offset: int  # absolute file offset of this layer's payload


@dataclass(frozen=True)
class PackedModel:
    path: str
    version: int
    n_layers: int
    total_payload_bytes: int
    seed: int
    layers: tuple[PackedLayer, ...]

    @property
    def payload_start(self) -> int:
        return HEADER_BYTES + RECORD_BYTES * self.n_layers

    @property
    def file_size(self) -> int:
        return self.payload_start + self.total_payload_bytes


def _layer_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def layer_payload(seed: int, index: int, size_bytes: int) -> bytes:
    """Deterministic payload for one layer (1-based index)."""
    return _layer_rng(seed, index).integers(0, 256, size=size_bytes, dtype=np.uint8).tobytes()


def pack_model(trace: ModelTrace, seed: int, out: str | Path) -> PackedModel:
    """Write the packed model for a trace's layer sizes; returns its summary."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 bits")
    sizes = [l.size_bytes for l in trace.iterations[0]]
    if not sizes:
        raise PackFormatError("zero-layer trace")
    total = sum(sizes)

    records = []
    out = Path(out)
    with open(out, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, len(sizes), total, seed))
        f.seek(HEADER_BYTES + RECORD_BYTES * len(sizes))
        offset = f.tell()
        for index, size in enumerate(sizes, start=1):
            rng = _layer_rng(seed, index)
            crc = 0
            remaining = size
            while remaining:
                n = min(remaining, _CHUNK)
                chunk = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
                crc = zlib.crc32(chunk, crc)
                f.write(chunk)
                remaining -= n
            records.append(PackedLayer(size, crc, offset))
            offset += size
        f.seek(HEADER_BYTES)
        for rec in records:
            f.write(_RECORD.pack(rec.size_bytes, rec.crc32))
    return PackedModel(str(out), VERSION, len(sizes), total, seed, tuple(records))


def read_header(path: str | Path) -> PackedModel:
    """Parse and sanity-check a packed model's header and layer table."""
    path = Path(path)
    file_size = os.path.getsize(path)
    with open(path, "rb") as f:
        head = f.read(HEADER_BYTES)
        if len(head) < HEADER_BYTES:
            raise PackFormatError("truncated header")
        magic, version, n, total, seed = _HEADER.unpack(head)
        if magic != MAGIC:
            raise PackFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise PackFormatError(f"unsupported version {version}")
        table = f.read(RECORD_BYTES * n)
        if len(table) < RECORD_BYTES * n:
            raise PackFormatError("truncated layer table")
    layers = []
    offset = HEADER_BYTES + RECORD_BYTES * n
    for i in range(n):
        size, crc = _RECORD.unpack_from(table, i * RECORD_BYTES)
        layers.append(PackedLayer(size, crc, offset))
        offset += size
    model = PackedModel(str(path), version, n, total, seed, tuple(layers))
    if sum(l.size_bytes for l in layers) != total:
        raise PackFormatError("layer table does not sum to total payload size")
    if model.file_size != file_size:
        raise PackFormatError(f"file size {file_size} != header-implied {model.file_size}")
    return model


def verify_model(path: str | Path) -> list[bool]:
    """Re-checksum every payload against the table; True per intact layer."""
    model = read_header(path)
    verdicts = []
    with open(path, "rb") as f:
        f.seek(model.payload_start)
        for layer in model.layers:
            crc = 0
            remaining = layer.size_bytes
            while remaining:
                chunk = f.read(min(remaining, _CHUNK))
                if not chunk:
                    raise PackFormatError("truncated payload")
                crc = zlib.crc32(chunk, crc)
                remaining -= len(chunk)
            verdicts.append(crc == layer.crc32)
    return verdicts


def check_trace_match(model: PackedModel, trace: ModelTrace) -> None:
    """Packed sizes must equal the trace's layer sizes, in order."""
    sizes = [l.size_bytes for l in trace.iterations[0]]
    if len(sizes) != model.n_layers:
        raise PackFormatError(
            f"file/trace mismatch: {model.n_layers} packed layers vs {len(sizes)} trace layers"
        )
    for i, (packed, expected) in enumerate(zip(model.layers, sizes), start=1):
        if packed.size_bytes != expected:
            raise PackFormatError(
                f"file/trace mismatch at layer {i}: packed {packed.size_bytes} vs trace {expected}"
            )
