"""FireLite model graph: a MobileNet-v1 body feeding a small two-class head.

The graph is declarative (layer kinds, hyperparameters, weight tensor names,
trainable flags); `forward` interprets it against a validated WeightStore.
The trainable-layer policy is: the final backbone batch norm plus the whole
head train, everything else stays frozen, which puts the trainable parameter
count at exactly 34,978:

    head dense 1024->32          32,800
    head batch norm (32 ch)          64
    head dense 32->2                 66
    final backbone bn (1024 ch)   2,048
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ShapeError, WeightError
from .ops import (
    BatchNormParams,
    ConvSpec,
    batchnorm_infer,
    conv2d,
    dense,
    depthwise_conv2d,
    fold_batchnorm,
    global_avg_pool,
    relu,
    relu6,
    softmax,
)
from .tensor import Tensor
from .weights import WeightStore

__all__ = [
    "LayerKind",
    "LayerSpec",
    "ModelGraph",
    "Prediction",
    "ParamCount",
    "INPUT_SIZE",
    "build_firelite",
    "count_params",
    "forward",
    "predict",
    "fold_graph",
    "activation_shapes",
    "peak_activation_bytes",
]

INPUT_SIZE = 224

# (output channels, depthwise stride) for the 13 separable blocks, alpha=1.0.
_BLOCKS = (
    (64, 1), (128, 2), (128, 1), (256, 2), (256, 1), (512, 2),
    (512, 1), (512, 1), (512, 1), (512, 1), (512, 1), (1024, 2), (1024, 1),
)

_BN_SUFFIXES = (".gamma", ".beta", ".mean", ".var")


class LayerKind(enum.Enum):
    CONV = "conv"
    DEPTHWISE_CONV = "depthwise_conv"
    BATCHNORM = "batchnorm"
    RELU = "relu"
    RELU6 = "relu6"
    GLOBAL_AVG_POOL = "global_avg_pool"
    DENSE = "dense"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the graph; unused fields stay None for simple kinds."""

    name: str
    kind: LayerKind
    conv: ConvSpec | None = None
    kernel_hw: tuple[int, int] | None = None
    in_channels: int | None = None
    out_channels: int | None = None
    weight_names: tuple[str, ...] = ()
    has_bias: bool = False
    trainable: bool = False


class ParamCount(NamedTuple):
    total: int
    trainable: int
    non_trainable: int


@dataclass(frozen=True)
class Prediction:
    label: str
    class_index: int
    probabilities: tuple[float, ...]


def _infer_shape(layer: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    """Output activation shape (without batch dim) for one layer."""
    kind = layer.kind
    if kind in (LayerKind.CONV, LayerKind.DEPTHWISE_CONV):
        if len(shape) != 3:
            raise ShapeError(f"{layer.name}: expected spatial input, got {shape}")
        h, w, c = shape
        if c != layer.in_channels:
            raise ShapeError(f"{layer.name}: expected {layer.in_channels} input channels, got {c}")
        kh, kw = layer.kernel_hw
        stride = layer.conv.stride
        if layer.conv.padding == "same":
            oh, ow = math.ceil(h / stride), math.ceil(w / stride)
        else:
            if kh > h or kw > w:
                raise ShapeError(f"{layer.name}: kernel {kh}x{kw} larger than input {h}x{w}")
            oh, ow = (h - kh) // stride + 1, (w - kw) // stride + 1
        return (oh, ow, layer.out_channels)
    if kind == LayerKind.BATCHNORM:
        if shape[-1] != layer.out_channels:
            raise ShapeError(f"{layer.name}: batch norm over {layer.out_channels} channels, input has {shape[-1]}")
        return shape
    if kind in (LayerKind.RELU, LayerKind.RELU6, LayerKind.SOFTMAX):
        return shape
    if kind == LayerKind.GLOBAL_AVG_POOL:
        if len(shape) != 3:
            raise ShapeError(f"{layer.name}: global pooling needs spatial input, got {shape}")
        return (shape[2],)
    if kind == LayerKind.DENSE:
        if len(shape) != 1:
            raise ShapeError(f"{layer.name}: dense needs flat input, got {shape}")
        if shape[0] != layer.in_channels:
            raise ShapeError(f"{layer.name}: expected {layer.in_channels} features, got {shape[0]}")
        return (layer.out_channels,)
    raise ConfigError(f"unknown layer kind {kind}")


@dataclass(frozen=True)
class ModelGraph:
    """Ordered layers plus the input contract; shape-checked on construction."""

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int] | tuple[int]
    class_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.class_names) != 2:
            raise ConfigError(f"expected exactly 2 class names, got {list(self.class_names)}")
        self.output_shapes()  # chain-check now; raises ShapeError on mismatch

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output activation shapes, batch dim omitted."""
        shapes = []
        shape = tuple(self.input_shape)
        for layer in self.layers:
            shape = _infer_shape(layer, shape)
            shapes.append(shape)
        return shapes

    def weight_shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected shape of every weight tensor the graph consumes."""
        out: dict[str, tuple[int, ...]] = {}
        for layer in self.layers:
            if layer.kind == LayerKind.CONV:
                kh, kw = layer.kernel_hw
                out[layer.weight_names[0]] = (kh, kw, layer.in_channels, layer.out_channels)
                if layer.has_bias:
                    out[layer.weight_names[1]] = (layer.out_channels,)
            elif layer.kind == LayerKind.DEPTHWISE_CONV:
                kh, kw = layer.kernel_hw
                out[layer.weight_names[0]] = (kh, kw, layer.in_channels, 1)
                if layer.has_bias:
                    out[layer.weight_names[1]] = (layer.out_channels,)
            elif layer.kind == LayerKind.DENSE:
                out[layer.weight_names[0]] = (layer.in_channels, layer.out_channels)
                if layer.has_bias:
                    out[layer.weight_names[1]] = (layer.out_channels,)
            elif layer.kind == LayerKind.BATCHNORM:
                for name in layer.weight_names:
                    out[name] = (layer.out_channels,)
        return out


def _conv_layer(name, kind, kh, kw, cin, cout, stride, trainable=False, has_bias=False):
    weight_names = (f"{name}.kernel",) + ((f"{name}.bias",) if has_bias else ())
    return LayerSpec(
        name=name.replace(".", "_"),
        kind=kind,
        conv=ConvSpec(stride, "same"),
        kernel_hw=(kh, kw),
        in_channels=cin,
        out_channels=cout,
        weight_names=weight_names,
        has_bias=has_bias,
        trainable=trainable,
    )


def _bn_layer(prefix, channels, trainable=False):
    return LayerSpec(
        name=f"{prefix.replace('.', '_')}_bn",
        kind=LayerKind.BATCHNORM,
        out_channels=channels,
        weight_names=tuple(f"{prefix}.bn{s}" for s in _BN_SUFFIXES),
        trainable=trainable,
    )


def _act_layer(prefix, kind):
    return LayerSpec(name=f"{prefix}_{'relu6' if kind is LayerKind.RELU6 else 'relu'}", kind=kind)


def build_firelite(input_size: int = INPUT_SIZE, class_names=("fire", "nonfire")) -> ModelGraph:
    """Canonical graph: MobileNet-v1 alpha=1.0 body plus the two-class head."""
    if input_size != INPUT_SIZE:
        raise ConfigError(f"only {INPUT_SIZE}x{INPUT_SIZE} input is supported, got {input_size}")
    layers: list[LayerSpec] = [
        _conv_layer("conv1", LayerKind.CONV, 3, 3, 3, 32, stride=2),
        _bn_layer("conv1", 32),
        _act_layer("conv1", LayerKind.RELU6),
    ]
    cin = 32
    for i, (cout, stride) in enumerate(_BLOCKS, start=1):
        dw = f"block{i:02d}.dw"
        pw = f"block{i:02d}.pw"
        final_bn = i == len(_BLOCKS)  # last backbone batch norm trains
        layers += [
            _conv_layer(dw, LayerKind.DEPTHWISE_CONV, 3, 3, cin, cin, stride),
            _bn_layer(dw, cin),
            _act_layer(f"block{i:02d}_dw", LayerKind.RELU6),
            _conv_layer(pw, LayerKind.CONV, 1, 1, cin, cout, stride=1),
            _bn_layer(pw, cout, trainable=final_bn),
            _act_layer(f"block{i:02d}_pw", LayerKind.RELU6),
        ]
        cin = cout
    layers += [
        LayerSpec(name="gap", kind=LayerKind.GLOBAL_AVG_POOL),
        LayerSpec(
            name="head_dense1",
            kind=LayerKind.DENSE,
            in_channels=1024,
            out_channels=32,
            weight_names=("head.dense1.kernel", "head.dense1.bias"),
            has_bias=True,
            trainable=True,
        ),
        _bn_layer("head", 32, trainable=True),
        _act_layer("head", LayerKind.RELU),
        LayerSpec(
            name="head_dense2",
            kind=LayerKind.DENSE,
            in_channels=32,
            out_channels=2,
            weight_names=("head.dense2.kernel", "head.dense2.bias"),
            has_bias=True,
            trainable=True,
        ),
        LayerSpec(name="head_softmax", kind=LayerKind.SOFTMAX),
    ]
    return ModelGraph(
        layers=tuple(layers),
        input_shape=(input_size, input_size, 3),
        class_names=tuple(class_names),
    )


def count_params(graph: ModelGraph) -> ParamCount:
    """Standard parameter accounting; batch norm moving stats never train."""
    trainable = 0
    non_trainable = 0
    for layer in graph.layers:
        if layer.kind == LayerKind.CONV:
            kh, kw = layer.kernel_hw
            n = kh * kw * layer.in_channels * layer.out_channels
            n += layer.out_channels if layer.has_bias else 0
        elif layer.kind == LayerKind.DEPTHWISE_CONV:
            kh, kw = layer.kernel_hw
            n = kh * kw * layer.in_channels
            n += layer.out_channels if layer.has_bias else 0
        elif layer.kind == LayerKind.DENSE:
            n = layer.in_channels * layer.out_channels + layer.out_channels
        elif layer.kind == LayerKind.BATCHNORM:
            c = layer.out_channels
            if layer.trainable:
                trainable += 2 * c
                non_trainable += 2 * c
            else:
                non_trainable += 4 * c
            continue
        else:
            continue
        if layer.trainable:
            trainable += n
        else:
            non_trainable += n
    return ParamCount(trainable + non_trainable, trainable, non_trainable)


def _fetch(store: WeightStore, name: str, shape: tuple[int, ...]) -> Tensor:
    tensor = store.get(name)
    if tensor is None:
        raise WeightError(f"missing weight tensor {name!r}")
    if tensor.shape != shape:
        raise WeightError(f"weight tensor {name!r} has shape {tensor.shape}, expected {shape}")
    return tensor


def _bn_params(store: WeightStore, layer: LayerSpec) -> BatchNormParams:
    c = (layer.out_channels,)
    eps = float(store.metadata.get("bn_epsilon", "1e-3"))
    gamma, beta, mean, var = (_fetch(store, n, c) for n in layer.weight_names)
    return BatchNormParams(gamma.array, beta.array, mean.array, var.array, eps)


def forward(
    graph: ModelGraph,
    store: WeightStore,
    x: Tensor,
    trace: list[tuple[str, tuple[int, ...]]] | None = None,
) -> Tensor:
    """Run the graph on an NxHxWxC input; returns the Nx2 probability rows.

    Pure function of (weights, input): repeated calls are bit-identical.
    Pass a list as `trace` to collect (layer name, output shape) pairs.
    """
    if x.rank != 4 or x.shape[1:] != tuple(graph.input_shape):
        raise ShapeError(f"input shape {x.shape} does not match Nx{graph.input_shape}")
    shapes = graph.weight_shapes()
    out = x
    for layer, expected in zip(graph.layers, graph.output_shapes()):
        kind = layer.kind
        if kind == LayerKind.CONV:
            kernel = _fetch(store, layer.weight_names[0], shapes[layer.weight_names[0]])
            bias = _fetch(store, layer.weight_names[1], (layer.out_channels,)).array if layer.has_bias else None
            out = conv2d(out, kernel, bias, layer.conv)
        elif kind == LayerKind.DEPTHWISE_CONV:
            kernel = _fetch(store, layer.weight_names[0], (*layer.kernel_hw, layer.in_channels, 1))
            bias = _fetch(store, layer.weight_names[1], (layer.out_channels,)).array if layer.has_bias else None
            out = depthwise_conv2d(out, kernel, bias, layer.conv)
        elif kind == LayerKind.BATCHNORM:
            out = batchnorm_infer(out, _bn_params(store, layer))
        elif kind == LayerKind.RELU:
            out = relu(out)
        elif kind == LayerKind.RELU6:
            out = relu6(out)
        elif kind == LayerKind.GLOBAL_AVG_POOL:
            out = global_avg_pool(out)
        elif kind == LayerKind.DENSE:
            kernel = _fetch(store, layer.weight_names[0], (layer.in_channels, layer.out_channels))
            bias = _fetch(store, layer.weight_names[1], (layer.out_channels,))
            out = dense(out, kernel, bias.array)
        elif kind == LayerKind.SOFTMAX:
            out = softmax(out)
        if trace is not None:
            trace.append((layer.name, out.shape))
        assert out.shape[1:] == expected, f"{layer.name}: {out.shape[1:]} != {expected}"
    return out


def predict(graph: ModelGraph, store: WeightStore, image: Tensor) -> Prediction:
    """Forward pass plus argmax; ties break toward the lowest class index."""
    probs = forward(graph, store, image)
    row = probs.array[0]
    idx = int(np.argmax(row))
    return Prediction(
        label=graph.class_names[idx],
        class_index=idx,
        probabilities=tuple(float(v) for v in row),
    )


def fold_graph(graph: ModelGraph, store: WeightStore) -> tuple[ModelGraph, WeightStore]:
    """Absorb every conv/dense-adjacent batch norm into the preceding layer.

    Returns a new graph without batch norm layers and a store holding the
    folded kernels plus `<layer>.bias` vectors.
    """
    foldable = (LayerKind.CONV, LayerKind.DEPTHWISE_CONV, LayerKind.DENSE)
    shapes = graph.weight_shapes()
    new_layers: list[LayerSpec] = []
    folded = WeightStore(metadata=dict(store.metadata))
    layers = graph.layers
    i = 0
    while i < len(layers):
        layer = layers[i]
        nxt = layers[i + 1] if i + 1 < len(layers) else None
        if layer.kind in foldable and nxt is not None and nxt.kind == LayerKind.BATCHNORM:
            kernel = _fetch(store, layer.weight_names[0], shapes[layer.weight_names[0]])
            bias = _fetch(store, layer.weight_names[1], (layer.out_channels,)).array if layer.has_bias else None
            fk, fb = fold_batchnorm(kernel, bias, _bn_params(store, nxt))
            base = layer.weight_names[0].rsplit(".", 1)[0]
            bias_name = f"{base}.bias"
            folded.add(layer.weight_names[0], fk)
            folded.add(bias_name, Tensor(fb))
            new_layers.append(
                replace(layer, weight_names=(layer.weight_names[0], bias_name), has_bias=True)
            )
            i += 2
            continue
        # Anything else (including a batch norm with no foldable producer)
        # is carried over unchanged.
        for name in layer.weight_names:
            folded.add(name, _fetch(store, name, shapes[name]))
        new_layers.append(layer)
        i += 1
    return (
        ModelGraph(tuple(new_layers), graph.input_shape, graph.class_names),
        folded,
    )


def activation_shapes(graph: ModelGraph) -> list[tuple[str, tuple[int, ...]]]:
    """(layer name, output shape) chain including the input buffer."""
    chain = [("input", tuple(graph.input_shape))]
    chain += [(l.name, s) for l, s in zip(graph.layers, graph.output_shapes())]
    return chain


def peak_activation_bytes(graph: ModelGraph) -> int:
    """Analytic peak under a ping-pong buffer policy: the largest sum of two
    adjacent activation buffers (batch size 1, 4 bytes per element)."""
    sizes = [4 * math.prod(shape) for _, shape in activation_shapes(graph)]
    return max(a + b for a, b in zip(sizes, sizes[1:]))
