"""Pure numerical kernels: convolutions, batch norm, activations, pooling.

All functions take and return :class:`~firelite.tensor.Tensor` values and are
pure; correctness of the convolution kernels is pinned by brute-force loop
oracles in the test suite, so the inner strategy (patch gathering plus one
matrix multiply) is free to change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .tensor import Tensor

__all__ = [
    "ConvSpec",
    "BatchNormParams",
    "conv2d",
    "depthwise_conv2d",
    "batchnorm_infer",
    "fold_batchnorm",
    "relu",
    "relu6",
    "global_avg_pool",
    "dense",
    "softmax",
]

PADDINGS = ("same", "valid")


@dataclass(frozen=True)
class ConvSpec:
    """Stride (shared by H and W) and padding mode of a convolution."""

    stride: int = 1
    padding: str = "same"

    def __post_init__(self):
        if self.stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {self.stride}")
        if self.padding not in PADDINGS:
            raise ConfigError(f"padding must be one of {PADDINGS}, got {self.padding!r}")


@dataclass(frozen=True)
class BatchNormParams:
    """Per-channel inference-time batch normalization parameters."""

    gamma: np.ndarray
    beta: np.ndarray
    moving_mean: np.ndarray
    moving_var: np.ndarray
    epsilon: float = 1e-3

    def __post_init__(self):
        for name in ("gamma", "beta", "moving_mean", "moving_var"):
            vec = np.asarray(getattr(self, name), dtype=np.float32).reshape(-1)
            object.__setattr__(self, name, vec)
        n = self.gamma.size
        if not (self.beta.size == self.moving_mean.size == self.moving_var.size == n):
            raise ShapeError("batch norm vectors must share one channel count")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if np.any(self.moving_var + np.float32(self.epsilon) <= 0):
            raise ConfigError("moving_var + epsilon must be positive")

    @property
    def channels(self) -> int:
        return int(self.gamma.size)


def _pad_amounts(size: int, kernel: int, stride: int) -> tuple[int, int]:
    # Same padding: output ceil(size/stride), extra padding on the high side.
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


def _conv_geometry(h, w, kh, kw, spec: ConvSpec):
    if spec.padding == "same":
        pt, pb = _pad_amounts(h, kh, spec.stride)
        pl, pr = _pad_amounts(w, kw, spec.stride)
        oh = math.ceil(h / spec.stride)
        ow = math.ceil(w / spec.stride)
    else:
        pt = pb = pl = pr = 0
        if kh > h or kw > w:
            raise ShapeError(f"kernel {kh}x{kw} larger than valid input {h}x{w}")
        oh = (h - kh) // spec.stride + 1
        ow = (w - kw) // spec.stride + 1
    return (pt, pb, pl, pr), (oh, ow)


def _windows(x: np.ndarray, kh: int, kw: int, spec: ConvSpec):
    """Strided view of all receptive fields: (N, OH, OW, KH, KW, C)."""
    n, h, w, c = x.shape
    (pt, pb, pl, pr), (oh, ow) = _conv_geometry(h, w, kh, kw, spec)
    if pt or pb or pl or pr:
        x = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    win = win[:, :: spec.stride, :: spec.stride]  # (N, OH, OW, C, KH, KW)
    return win.transpose(0, 1, 2, 4, 5, 3), (oh, ow)


def _bias_vector(bias: Sequence[float] | None, channels: int) -> np.ndarray | None:
    if bias is None:
        return None
    vec = np.asarray(bias, dtype=np.float32).reshape(-1)
    if vec.size != channels:
        raise ShapeError(f"bias has {vec.size} entries, expected {channels}")
    return vec


def conv2d(x: Tensor, kernel: Tensor, bias: Sequence[float] | None, spec: ConvSpec) -> Tensor:
    """Standard convolution; x: NxHxWxCin, kernel: KhxKwxCinxCout."""
    if x.rank != 4 or kernel.rank != 4:
        raise ShapeError(f"conv2d needs rank-4 input and kernel, got {x.shape} and {kernel.shape}")
    kh, kw, cin, cout = kernel.shape
    if x.shape[3] != cin:
        raise ShapeError(f"input has {x.shape[3]} channels, kernel expects {cin}")
    b = _bias_vector(bias, cout)
    karr = kernel.array
    if kh == kw == 1 and spec.stride == 1:
        # 1x1 stride-1 convolution is a plain channel mixing matmul.
        out = x.array @ karr.reshape(cin, cout)
    else:
        win, (oh, ow) = _windows(x.array, kh, kw, spec)
        patches = win.reshape(x.shape[0] * oh * ow, kh * kw * cin)
        out = (patches @ karr.reshape(kh * kw * cin, cout)).reshape(x.shape[0], oh, ow, cout)
    if b is not None:
        out = out + b
    return Tensor(out)


def depthwise_conv2d(x: Tensor, kernel: Tensor, bias: Sequence[float] | None, spec: ConvSpec) -> Tensor:
    """Per-channel spatial convolution; kernel: KhxKwxCx1."""
    if x.rank != 4 or kernel.rank != 4:
        raise ShapeError(f"depthwise_conv2d needs rank-4 input and kernel, got {x.shape} and {kernel.shape}")
    kh, kw, c, mult = kernel.shape
    if mult != 1:
        raise ShapeError(f"depthwise kernel multiplier must be 1, got {mult}")
    if x.shape[3] != c:
        raise ShapeError(f"input has {x.shape[3]} channels, depthwise kernel expects {c}")
    b = _bias_vector(bias, c)
    win, (oh, ow) = _windows(x.array, kh, kw, spec)  # (N, OH, OW, KH, KW, C)
    out = np.einsum("nijabc,abc->nijc", win, kernel.array[:, :, :, 0], optimize=True)
    out = out.astype(np.float32, copy=False)
    if b is not None:
        out = out + b
    return Tensor(out)


def batchnorm_infer(x: Tensor, bn: BatchNormParams) -> Tensor:
    """gamma * (x - mean) / sqrt(var + eps) + beta, per channel (last axis)."""
    if x.rank not in (2, 4):
        raise ShapeError(f"batchnorm_infer expects rank 2 or 4 input, got {x.shape}")
    if x.shape[-1] != bn.channels:
        raise ShapeError(f"input has {x.shape[-1]} channels, batch norm has {bn.channels}")
    scale = bn.gamma / np.sqrt(bn.moving_var + np.float32(bn.epsilon))
    return Tensor((x.array - bn.moving_mean) * scale + bn.beta)


def fold_batchnorm(
    kernel: Tensor, bias: Sequence[float] | None, bn: BatchNormParams
) -> tuple[Tensor, np.ndarray]:
    """Absorb an inference batch norm into the preceding layer's weights.

    Works for standard conv kernels (output channel last), depthwise kernels
    (KhxKwxCx1, channel on axis 2) and dense kernels (DinxDout). Returns the
    scaled kernel and the new bias vector.
    """
    c = bn.channels
    karr = kernel.array
    if kernel.rank == 4 and kernel.shape[3] == 1 and kernel.shape[2] == c:
        channel_axis = 2
    elif kernel.shape[-1] == c:
        channel_axis = kernel.rank - 1
    else:
        raise ShapeError(
            f"batch norm over {c} channels does not match kernel shape {kernel.shape}"
        )
    scale = bn.gamma / np.sqrt(bn.moving_var + np.float32(bn.epsilon))
    shape = [1] * kernel.rank
    shape[channel_axis] = c
    folded_kernel = karr * scale.reshape(shape)
    b = _bias_vector(bias, c)
    if b is None:
        b = np.zeros(c, dtype=np.float32)
    folded_bias = scale * (b - bn.moving_mean) + bn.beta
    return Tensor(folded_kernel), folded_bias.astype(np.float32)


def relu(x: Tensor) -> Tensor:
    return Tensor(np.maximum(x.array, np.float32(0.0)))


def relu6(x: Tensor) -> Tensor:
    return Tensor(np.clip(x.array, np.float32(0.0), np.float32(6.0)))


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the spatial dimensions; NxHxWxC -> NxC."""
    if x.rank != 4:
        raise ShapeError(f"global_avg_pool expects rank-4 input, got {x.shape}")
    return Tensor(x.array.mean(axis=(1, 2), dtype=np.float32))


def dense(x: Tensor, weights: Tensor, bias: Sequence[float]) -> Tensor:
    """Affine map; x: NxDin, weights: DinxDout."""
    if x.rank != 2 or weights.rank != 2:
        raise ShapeError(f"dense expects rank-2 input and weights, got {x.shape} and {weights.shape}")
    if x.shape[1] != weights.shape[0]:
        raise ShapeError(f"inner dims differ: input {x.shape[1]}, weights {weights.shape[0]}")
    b = _bias_vector(bias, weights.shape[1])
    return Tensor(x.array @ weights.array + b)


def softmax(x: Tensor) -> Tensor:
    """Row-wise softmax computed with max subtraction for stability."""
    if x.rank != 2:
        raise ShapeError(f"softmax expects rank-2 input, got {x.shape}")
    shifted = x.array - x.array.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return Tensor(e / e.sum(axis=1, keepdims=True))
