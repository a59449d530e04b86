"""Model assembly: MobileNet backbone, slim two-class head, surgical unfreezing."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from tensorflow import keras

from .errors import TrainerError

INPUT_SIZE = 224
NUM_CLASSES = 2

# The only layers left trainable: the final backbone batch norm plus the head.
TRAINABLE_LAYERS = ("conv_pw_13_bn", "head_dense1", "head_bn", "head_dense2")

# Parameter budget per trainable layer; the total must come to 34,978.
EXPECTED_TRAINABLE = {
    "conv_pw_13_bn": 2 * 1024,
    "head_dense1": 1024 * 32 + 32,
    "head_bn": 2 * 32,
    "head_dense2": 32 * 2 + 2,
}


def build_model(backbone_weights: str = "imagenet", dropout: float = 0.5) -> keras.Model:
    """Backbone + head with the transfer-learning freeze already applied.

    Head: global average pool -> Dense(32) -> BatchNorm -> ReLU ->
    Dropout -> Dense(2, softmax). Dropout regularizes training only; it
    owns no weights and never appears in exported inference tensors.
    """
    if backbone_weights == "imagenet":
        try:
            base = _backbone("imagenet")
        except Exception as exc:
            raise TrainerError(
                f"pretrained backbone weights unavailable ({exc}); "
                "pass backbone_weights='random' or a local weights file"
            ) from exc
    elif backbone_weights == "random":
        base = _backbone(None)
    else:
        base = _backbone(None)
        path = Path(backbone_weights)
        if not path.is_file():
            raise TrainerError(f"backbone weights file not found: {path}")
        base.load_weights(path)

    x = keras.layers.GlobalAveragePooling2D(name="gap")(base.output)
    x = keras.layers.Dense(32, name="head_dense1")(x)
    x = keras.layers.BatchNormalization(name="head_bn")(x)
    x = keras.layers.ReLU(name="head_relu")(x)
    x = keras.layers.Dropout(dropout, name="head_dropout")(x)
    outputs = keras.layers.Dense(NUM_CLASSES, activation="softmax", name="head_dense2")(x)
    model = keras.Model(base.input, outputs, name="firelite")

    for layer in model.layers:
        layer.trainable = layer.name in TRAINABLE_LAYERS
    verify_trainable(model)
    return model


def _backbone(weights: str | None) -> keras.Model:
    return keras.applications.MobileNet(
        input_shape=(INPUT_SIZE, INPUT_SIZE, 3),
        alpha=1.0,
        include_top=False,
        weights=weights,
    )


def trainable_summary(model: keras.Model) -> dict[str, int]:
    """Trainable parameter count per layer, omitting fully frozen layers."""
    out: dict[str, int] = {}
    for layer in model.layers:
        count = sum(int(np.prod(w.shape)) for w in layer.trainable_weights)
        if count:
            out[layer.name] = count
    return out


def verify_trainable(model: keras.Model) -> None:
    """Assert the trainable set by name, not just by total count."""
    summary = trainable_summary(model)
    if summary != EXPECTED_TRAINABLE:
        raise TrainerError(
            f"unexpected trainable set {summary}; expected {EXPECTED_TRAINABLE}"
        )
