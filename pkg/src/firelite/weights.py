"""FLW1 binary weight container.

File layout (all integers little-endian):

    magic            "FLW1"                      4 bytes
    version          u32 == 1
    metadata-count   u32
    per entry        key-len u16, key bytes (utf-8),
                     val-len u16, val bytes (utf-8)
    tensor-count     u32
    per tensor       name-len u16, name bytes (utf-8),
                     dtype u8 == 1 (f32),
                     rank u8,
                     dims u32 x rank,
                     payload f32 x prod(dims), row-major
    crc32            u32, IEEE polynomial, over all preceding bytes

Tensor layout conventions: conv kernels KhxKwxCinxCout, depthwise kernels
KhxKwxCx1, dense kernels DinxDout, batch norm as four per-channel vectors
named <layer>.gamma / .beta / .mean / .var. Required metadata keys:
class_names, preprocessing, bn_epsilon.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Mapping

import numpy as np

from .errors import (
    DataError,
    StoreCorruptionError,
    StoreFormatError,
    StoreTruncationError,
    StoreVersionError,
)
from .tensor import Tensor

__all__ = [
    "MAGIC",
    "VERSION",
    "REQUIRED_METADATA",
    "FILE_EXTENSION",
    "WeightStore",
    "write_store",
    "store_to_bytes",
    "read_store",
    "read_store_bytes",
    "ValidationReport",
    "validate_against",
]

MAGIC = b"FLW1"
VERSION = 1
DTYPE_F32 = 1
MAX_NAME_BYTES = 255
REQUIRED_METADATA = ("class_names", "preprocessing", "bn_epsilon")
FILE_EXTENSION = ".flw"


def _check_name(name: str) -> bytes:
    encoded = name.encode("utf-8")
    if not 1 <= len(encoded) <= MAX_NAME_BYTES:
        raise StoreFormatError(f"tensor name must be 1..{MAX_NAME_BYTES} utf-8 bytes, got {len(encoded)}")
    return encoded


class WeightStore:
    """Ordered named tensor collection plus string metadata."""

    def __init__(
        self,
        tensors: Mapping[str, Tensor] | Iterable[tuple[str, Tensor]] | None = None,
        metadata: Mapping[str, str] | None = None,
    ):
        self._tensors: dict[str, Tensor] = {}
        self.metadata: dict[str, str] = dict(metadata or {})
        if tensors is not None:
            items = tensors.items() if isinstance(tensors, Mapping) else tensors
            for name, tensor in items:
                self.add(name, tensor)

    def add(self, name: str, tensor: Tensor) -> None:
        _check_name(name)
        if name in self._tensors:
            raise StoreFormatError(f"duplicate tensor name {name!r}")
        self._tensors[name] = tensor

    def get(self, name: str) -> Tensor | None:
        return self._tensors.get(name)

    def names(self) -> list[str]:
        return list(self._tensors)

    @property
    def tensors(self) -> dict[str, Tensor]:
        return dict(self._tensors)

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def tensor_bytes(self) -> int:
        """Total payload size of all tensors in bytes."""
        return sum(4 * t.size for t in self._tensors.values())

    def require_metadata(self) -> None:
        missing = [k for k in REQUIRED_METADATA if k not in self.metadata]
        if missing:
            raise StoreFormatError(f"metadata missing required keys: {missing}")


def store_to_bytes(store: WeightStore) -> bytes:
    store.require_metadata()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(store.metadata))
    for key, value in store.metadata.items():
        kb = key.encode("utf-8")
        vb = value.encode("utf-8")
        out += struct.pack("<H", len(kb)) + kb
        out += struct.pack("<H", len(vb)) + vb
    out += struct.pack("<I", len(store))
    for name, tensor in store.tensors.items():
        nb = _check_name(name)
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<BB", DTYPE_F32, tensor.rank)
        out += struct.pack(f"<{tensor.rank}I", *tensor.shape)
        out += tensor.array.astype("<f4", copy=False).tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def write_store(store: WeightStore, sink: BinaryIO) -> int:
    """Serialize the store; returns the number of bytes written."""
    payload = store_to_bytes(store)
    sink.write(payload)
    return len(payload)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise StoreTruncationError(
                f"need {n} bytes at offset {self.pos}, only {len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def utf8(self, n: int) -> str:
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise StoreFormatError(f"invalid utf-8 at offset {self.pos - n}") from exc


def read_store_bytes(data: bytes) -> WeightStore:
    """Parse and fully validate FLW1 bytes.

    The CRC is verified before any tensor is surfaced; every failure mode
    maps to a dedicated error class.
    """
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise StoreFormatError("bad magic, not an FLW1 container")
    version = r.u32()
    if version != VERSION:
        raise StoreVersionError(f"unsupported FLW1 version {version}")
    metadata: dict[str, str] = {}
    for _ in range(r.u32()):
        key = r.utf8(r.u16())
        value = r.utf8(r.u16())
        if key in metadata:
            raise StoreFormatError(f"duplicate metadata key {key!r}")
        metadata[key] = value
    raw_tensors: list[tuple[str, tuple[int, ...], bytes]] = []
    seen: set[str] = set()
    for _ in range(r.u32()):
        name_len = r.u16()
        if not 1 <= name_len <= MAX_NAME_BYTES:
            raise StoreFormatError(f"tensor name length {name_len} outside 1..{MAX_NAME_BYTES}")
        name = r.utf8(name_len)
        if name in seen:
            raise StoreFormatError(f"duplicate tensor name {name!r}")
        seen.add(name)
        dtype = r.u8()
        if dtype != DTYPE_F32:
            raise StoreFormatError(f"unsupported dtype tag {dtype}")
        rank = r.u8()
        if rank < 1:
            raise StoreFormatError(f"tensor {name!r} has rank 0")
        dims = tuple(r.u32() for _ in range(rank))
        if any(d < 1 for d in dims):
            raise StoreFormatError(f"tensor {name!r} has zero-sized dim in {dims}")
        count = 1
        for d in dims:
            count *= d
        raw_tensors.append((name, dims, r.take(4 * count)))
    body_end = r.pos
    declared_crc = r.u32()
    if r.pos != len(data):
        raise StoreFormatError(f"{len(data) - r.pos} trailing bytes after checksum")
    actual_crc = zlib.crc32(data[:body_end]) & 0xFFFFFFFF
    if actual_crc != declared_crc:
        raise StoreCorruptionError(
            f"crc mismatch: file says {declared_crc:#010x}, content is {actual_crc:#010x}"
        )
    missing = [k for k in REQUIRED_METADATA if k not in metadata]
    if missing:
        raise StoreFormatError(f"metadata missing required keys: {missing}")
    store = WeightStore(metadata=metadata)
    for name, dims, payload in raw_tensors:
        values = np.frombuffer(payload, dtype="<f4").reshape(dims)
        if not np.isfinite(values).all():
            raise DataError(f"tensor {name!r} contains non-finite values")
        store.add(name, Tensor(values))
    return store


def read_store(source: BinaryIO | bytes) -> WeightStore:
    data = source if isinstance(source, bytes) else source.read()
    return read_store_bytes(data)


@dataclass
class ValidationReport:
    """Differences between a store and what a model graph requires."""

    missing: list[str] = field(default_factory=list)
    mismatched: list[tuple[str, tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)
    unused: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.mismatched or self.unused)

    def to_dict(self) -> dict:
        return {
            "missing": list(self.missing),
            "mismatched": [
                {"name": name, "expected": list(want), "found": list(got)}
                for name, want, got in self.mismatched
            ],
            "unused": list(self.unused),
            "ok": self.ok,
        }


def validate_against(store: WeightStore, graph) -> ValidationReport:
    """Compare store contents against the weight shapes a graph requires."""
    report = ValidationReport()
    expected = graph.weight_shapes()
    for name, shape in expected.items():
        tensor = store.get(name)
        if tensor is None:
            report.missing.append(name)
        elif tensor.shape != shape:
            report.mismatched.append((name, shape, tensor.shape))
    for name in store.names():
        if name not in expected:
            report.unused.append(name)
    return report
