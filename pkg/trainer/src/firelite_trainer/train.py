"""Fine-tuning loop: Adam, sparse categorical cross-entropy, early stopping.

Determinism note: the split manifest is exactly reproducible from its
seed; the training run itself is seeded too, but bitwise repeatability
is only as good as the framework's kernels on the host in use.
"""

from __future__ import annotations

import dataclasses

from tensorflow import keras

from .config import TrainConfig
from .data import dataset_from_entries
from .model import build_model
from .splits import SplitManifest, prepare_splits

HISTORY_NAME = "history.csv"
MANIFEST_NAME = "split_manifest.json"


@dataclasses.dataclass
class TrainResult:
    model: keras.Model
    manifest: SplitManifest
    history: dict[str, list[float]]
    best_epoch: int  # 0-based index of the lowest validation loss
    best_val_accuracy: float
    test_accuracy: float

    @property
    def epochs_ran(self) -> int:
        return len(self.history["loss"])


def train(config: TrainConfig, manifest: SplitManifest | None = None) -> TrainResult:
    """Run one fine-tuning session and evaluate the held-out test split.

    Writes the split manifest and a per-epoch history CSV into
    ``config.output_dir``. Early stopping monitors validation loss and
    restores the best weights before the test evaluation.
    """
    keras.utils.set_random_seed(config.seed)
    if manifest is None:
        manifest = prepare_splits(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    manifest.write(config.output_dir / MANIFEST_NAME)

    train_ds = dataset_from_entries(
        config.dataset_root,
        manifest.splits["train"],
        batch_size=config.batch_size,
        shuffle=True,
        seed=config.seed,
    )
    val_ds = dataset_from_entries(
        config.dataset_root, manifest.splits["val"], batch_size=config.batch_size
    )
    test_ds = dataset_from_entries(
        config.dataset_root, manifest.splits["test"], batch_size=config.batch_size
    )

    model = build_model(config.backbone_weights, config.dropout)
    model.compile(
        optimizer=keras.optimizers.Adam(learning_rate=config.learning_rate),
        loss="sparse_categorical_crossentropy",
        metrics=["accuracy"],
    )
    callbacks = [
        keras.callbacks.EarlyStopping(
            monitor="val_loss", patience=config.patience, restore_best_weights=True
        ),
        keras.callbacks.CSVLogger(config.output_dir / HISTORY_NAME),
    ]
    fit = model.fit(
        train_ds,
        validation_data=val_ds,
        epochs=config.max_epochs,
        callbacks=callbacks,
        verbose=2,
    )
    history = {key: [float(v) for v in values] for key, values in fit.history.items()}
    best_epoch = min(range(len(history["val_loss"])), key=history["val_loss"].__getitem__)
    _, test_accuracy = model.evaluate(test_ds, verbose=0)

    return TrainResult(
        model=model,
        manifest=manifest,
        history=history,
        best_epoch=best_epoch,
        best_val_accuracy=max(history["val_accuracy"]),
        test_accuracy=float(test_accuracy),
    )
