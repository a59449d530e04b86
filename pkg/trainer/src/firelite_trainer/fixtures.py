"""Cross-runtime parity fixtures: synthetic images plus recorded outputs.

The generated directory holds 224x224 PNGs, an FLW1 weight file, and the
framework's softmax outputs for each image. The inference engine replays
the same images through the same weights and must reproduce the recorded
probabilities; any numerical drift between the two runtimes shows up as
a fixture mismatch.

Weights are random rather than trained: parity is a numerics contract,
not an accuracy one, and random weights cover it without shipping a
training run. Batch-norm statistics are calibrated on the fixture batch
itself so every layer sees well-scaled activations, then gamma/beta stay
randomly perturbed so folding and scaling paths are exercised.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image
from tensorflow import keras

from .errors import ExportError
from .export import export_flw
from .model import build_model

DEFAULT_SEED = 2025
DEFAULT_COUNT = 32
IMAGE_SIZE = 224

EXPECTED_NAME = "expected_probabilities.json"
WEIGHTS_NAME = "weights.flw"
TENSORS_NAME = "preprocessed.npz"


def synthetic_images(count: int = DEFAULT_COUNT, seed: int = DEFAULT_SEED,
                     size: int = IMAGE_SIZE) -> list[np.ndarray]:
    """Deterministic RGB test cards: noise, ramps, blobs, and waves.

    The four pattern families cycle by index so any prefix of the list
    still spans flat regions, hard edges, smooth gradients, and texture.
    """
    rng = np.random.default_rng(seed)
    span = np.linspace(0.0, 1.0, size)
    yy, xx = np.meshgrid(span, span, indexing="ij")
    images: list[np.ndarray] = []
    for index in range(count):
        kind = index % 4
        if kind == 0:
            arr = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
            images.append(arr)
            continue
        if kind == 1:
            start = rng.random(3)
            stop = rng.random(3)
            angle = rng.uniform(0.0, 2.0 * np.pi)
            ramp = (np.cos(angle) * xx + np.sin(angle) * yy + 1.0) / 3.0
            field = start + ramp[..., None] * (stop - start)
        elif kind == 2:
            field = np.full((size, size, 3), rng.random(3) * 0.3)
            for _ in range(4):
                cy, cx = rng.random(2)
                radius = rng.uniform(0.08, 0.35)
                color = rng.random(3)
                d2 = (yy - cy) ** 2 + (xx - cx) ** 2
                field += color * np.exp(-d2 / (2.0 * radius**2))[..., None]
            field /= field.max()
        else:
            waves = []
            for _ in range(3):
                fy, fx = rng.uniform(2.0, 12.0, size=2)
                phase = rng.uniform(0.0, 2.0 * np.pi)
                waves.append(0.5 + 0.5 * np.sin(2.0 * np.pi * (fy * yy + fx * xx) + phase))
            field = np.stack(waves, axis=-1)
        images.append(np.clip(field * 255.0, 0.0, 255.0).astype(np.uint8))
    return images


def preprocess_batch(images: list[np.ndarray]) -> np.ndarray:
    """Stack uint8 images into the [-1, 1] float batch the model consumes."""
    batch = np.stack(images).astype(np.float32)
    return batch / np.float32(127.5) - np.float32(1.0)


def randomize_weights(model: keras.Model, seed: int) -> None:
    """Reseed every weight from numpy so fixtures never depend on
    framework initializer internals."""
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        if isinstance(layer, keras.layers.BatchNormalization):
            size = layer.get_weights()[0].shape
            layer.set_weights([
                rng.uniform(0.75, 1.25, size).astype(np.float32),
                rng.normal(0.0, 0.1, size).astype(np.float32),
                np.zeros(size, dtype=np.float32),
                np.ones(size, dtype=np.float32),
            ])
        elif isinstance(layer, keras.layers.DepthwiseConv2D):
            (kernel,) = layer.get_weights()
            std = np.sqrt(2.0 / (kernel.shape[0] * kernel.shape[1]))
            layer.set_weights([rng.normal(0.0, std, kernel.shape).astype(np.float32)])
        elif isinstance(layer, keras.layers.Conv2D):
            (kernel,) = layer.get_weights()
            fan_in = kernel.shape[0] * kernel.shape[1] * kernel.shape[2]
            std = np.sqrt(2.0 / fan_in)
            layer.set_weights([rng.normal(0.0, std, kernel.shape).astype(np.float32)])
        elif isinstance(layer, keras.layers.Dense):
            kernel, bias = layer.get_weights()
            std = np.sqrt(2.0 / kernel.shape[0])
            layer.set_weights([
                rng.normal(0.0, std, kernel.shape).astype(np.float32),
                rng.normal(0.0, 0.05, bias.shape).astype(np.float32),
            ])


def calibrate_batchnorm(model: keras.Model, batch: np.ndarray) -> None:
    """Set every BN layer's moving statistics to the batch's actual moments.

    Layers are visited in graph order, so each calibration sees the
    corrected outputs of all earlier ones. Gamma and beta are preserved.
    """
    for layer in model.layers:
        if not isinstance(layer, keras.layers.BatchNormalization):
            continue
        probe = keras.Model(model.input, layer.input)
        activations = probe.predict(batch, verbose=0)
        reduce_axes = tuple(range(activations.ndim - 1))
        mean = activations.mean(axis=reduce_axes)
        var = activations.var(axis=reduce_axes)
        gamma, beta, _, _ = layer.get_weights()
        layer.set_weights([
            gamma,
            beta,
            mean.astype(np.float32),
            var.astype(np.float32),
        ])


def generate(out_dir: Path, *, seed: int = DEFAULT_SEED, count: int = DEFAULT_COUNT,
             write_tensors: bool = False) -> dict:
    """Produce the parity fixture directory; returns a run summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    images = synthetic_images(count=count, seed=seed)
    names = [f"parity_{index:02d}.png" for index in range(count)]
    for name, arr in zip(names, images):
        Image.fromarray(arr, "RGB").save(out / name)

    model = build_model(backbone_weights="random")
    randomize_weights(model, seed)
    batch = preprocess_batch(images)
    calibrate_batchnorm(model, batch)

    probabilities = model.predict(batch, batch_size=count, verbose=0)
    if not np.isfinite(probabilities).all():
        raise ExportError("fixture model produced non-finite probabilities")
    if np.abs(probabilities.sum(axis=1) - 1.0).max() > 1e-5:
        raise ExportError("fixture probabilities do not sum to one")
    spread = float(probabilities[:, 0].max() - probabilities[:, 0].min())
    if count > 1 and spread < 1e-3:
        raise ExportError(f"fixture outputs are degenerate (spread {spread:.2e})")

    expected = {
        name: [float(p) for p in row]
        for name, row in zip(names, probabilities)
    }
    (out / EXPECTED_NAME).write_text(
        json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    flw_bytes = export_flw(model, out / WEIGHTS_NAME)
    if write_tensors:
        np.savez_compressed(out / TENSORS_NAME, **dict(zip(names, batch)))

    return {
        "count": count,
        "seed": seed,
        "names": names,
        "weights_bytes": flw_bytes,
        "probability_spread": spread,
    }
