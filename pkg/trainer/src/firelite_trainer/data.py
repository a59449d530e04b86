"""tf.data input pipelines matching the runtime preprocessing contract.

Images are decoded to RGB, bilinearly resized to 224x224, and scaled to
[-1, 1] via x / 127.5 - 1 — the same normalization the inference engine
applies, so exported weights see identically distributed inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import tensorflow as tf

from .config import CLASS_NAMES

IMAGE_SIZE = 224


def _load_example(path: tf.Tensor, label: tf.Tensor) -> tuple[tf.Tensor, tf.Tensor]:
    raw = tf.io.read_file(path)
    image = tf.io.decode_image(raw, channels=3, expand_animations=False)
    image.set_shape([None, None, 3])
    image = tf.image.resize(image, [IMAGE_SIZE, IMAGE_SIZE], method="bilinear")
    image = image / 127.5 - 1.0
    return image, label


def label_of(entry: str) -> int:
    """Class index of a manifest entry; the first path component names it."""
    return CLASS_NAMES.index(entry.split("/", 1)[0])


def dataset_from_entries(
    dataset_root: Path,
    entries: Sequence[str],
    *,
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
) -> tf.data.Dataset:
    """Batched dataset over manifest entries, optionally reshuffled per epoch."""
    root = Path(dataset_root)
    paths = [str(root / entry) for entry in entries]
    labels = [label_of(entry) for entry in entries]
    ds = tf.data.Dataset.from_tensor_slices((paths, labels))
    if shuffle:
        ds = ds.shuffle(len(paths), seed=seed, reshuffle_each_iteration=True)
    ds = ds.map(_load_example, num_parallel_calls=tf.data.AUTOTUNE)
    return ds.batch(batch_size).prefetch(tf.data.AUTOTUNE)
