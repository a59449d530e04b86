"""Serialize a trained Keras model into the FLW1 weight container.

This is a from-scratch writer for the runtime's binary format: magic
"FLW1", little-endian header, length-prefixed UTF-8 names, f32 row-major
payloads, and a trailing CRC32 over everything before it. Keeping the
writer independent of the runtime package means the file format itself
is the only contract shared between the two.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path
from typing import Iterator

import numpy as np
from tensorflow import keras

from .config import CLASS_NAMES
from .errors import ExportError

MAGIC = b"FLW1"
VERSION = 1
DTYPE_F32 = 1

PREPROCESSING_ID = "mobilenet_scale_127.5"
BN_EPSILON = 1e-3

# FLW1 tensor-name templates keyed by the Keras layer that owns the weights.
_BN_SUFFIXES = ("gamma", "beta", "mean", "var")


def _bn_entries(model: keras.Model, layer_name: str, prefix: str) -> Iterator[tuple[str, np.ndarray]]:
    layer = model.get_layer(layer_name)
    if abs(layer.epsilon - BN_EPSILON) > 1e-12:
        raise ExportError(
            f"{layer_name} uses epsilon {layer.epsilon!r}; the runtime assumes {BN_EPSILON!r}"
        )
    values = layer.get_weights()  # gamma, beta, moving_mean, moving_variance
    if len(values) != 4:
        raise ExportError(f"{layer_name} has {len(values)} weights; expected 4")
    for suffix, value in zip(_BN_SUFFIXES, values):
        yield f"{prefix}.{suffix}", value


def _kernel_entry(model: keras.Model, layer_name: str, name: str) -> tuple[str, np.ndarray]:
    (kernel,) = model.get_layer(layer_name).get_weights()
    return name, kernel


def _dense_entries(model: keras.Model, layer_name: str, prefix: str) -> Iterator[tuple[str, np.ndarray]]:
    kernel, bias = model.get_layer(layer_name).get_weights()
    yield f"{prefix}.kernel", kernel
    yield f"{prefix}.bias", bias


def inference_tensors(model: keras.Model) -> dict[str, np.ndarray]:
    """All inference-time weights under the runtime's naming scheme.

    Dropout layers carry no weights, so the export is exactly the
    inference graph: conv1, thirteen depthwise-separable blocks, head.
    """
    entries: dict[str, np.ndarray] = {}

    def put(name: str, value: np.ndarray) -> None:
        if name in entries:
            raise ExportError(f"duplicate tensor name {name!r}")
        entries[name] = np.asarray(value, dtype=np.float32)

    put(*_kernel_entry(model, "conv1", "conv1.kernel"))
    for name, value in _bn_entries(model, "conv1_bn", "conv1.bn"):
        put(name, value)
    for index in range(1, 14):
        block = f"block{index:02d}"
        put(*_kernel_entry(model, f"conv_dw_{index}", f"{block}.dw.kernel"))
        for name, value in _bn_entries(model, f"conv_dw_{index}_bn", f"{block}.dw.bn"):
            put(name, value)
        put(*_kernel_entry(model, f"conv_pw_{index}", f"{block}.pw.kernel"))
        for name, value in _bn_entries(model, f"conv_pw_{index}_bn", f"{block}.pw.bn"):
            put(name, value)
    for name, value in _dense_entries(model, "head_dense1", "head.dense1"):
        put(name, value)
    for name, value in _bn_entries(model, "head_bn", "head.bn"):
        put(name, value)
    for name, value in _dense_entries(model, "head_dense2", "head.dense2"):
        put(name, value)
    return entries


def default_metadata() -> dict[str, str]:
    return {
        "class_names": ",".join(CLASS_NAMES),
        "preprocessing": PREPROCESSING_ID,
        "bn_epsilon": f"{BN_EPSILON:g}",
    }


def store_bytes(tensors: dict[str, np.ndarray], metadata: dict[str, str]) -> bytes:
    """Encode tensors plus metadata as an FLW1 byte string."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(metadata))
    for key, value in metadata.items():
        for text in (key, value):
            blob = text.encode("utf-8")
            out += struct.pack("<H", len(blob)) + blob
    out += struct.pack("<I", len(tensors))
    for name, array in tensors.items():
        blob = name.encode("utf-8")
        if not 1 <= len(blob) <= 255:
            raise ExportError(f"tensor name {name!r} must encode to 1..255 bytes")
        value = np.ascontiguousarray(array, dtype="<f4")
        if value.ndim < 1 or any(dim < 1 for dim in value.shape):
            raise ExportError(f"tensor {name!r} has unsupported shape {value.shape}")
        if not np.isfinite(value).all():
            raise ExportError(f"tensor {name!r} contains non-finite values")
        out += struct.pack("<H", len(blob)) + blob
        out += struct.pack("<BB", DTYPE_F32, value.ndim)
        out += struct.pack(f"<{value.ndim}I", *value.shape)
        out += value.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def export_flw(model: keras.Model, path: Path) -> int:
    """Write the model's inference weights to ``path``; returns byte count."""
    payload = store_bytes(inference_tensors(model), default_metadata())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return len(payload)
