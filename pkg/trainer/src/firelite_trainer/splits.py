"""Deterministic stratified train/val/test splitting with an on-disk manifest."""

from __future__ import annotations

import dataclasses
import json
import math
import random
from pathlib import Path

from .config import CLASS_NAMES, TrainConfig
from .errors import DatasetLayoutError, SplitError

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")

# Below this, a 10%/10% split cannot give every partition a sensible share.
MIN_IMAGES_PER_CLASS = 10

SPLIT_NAMES = ("train", "val", "test")


def round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def allocate(counts: dict[str, int], fraction: float) -> dict[str, int]:
    """Largest-remainder apportionment of ``fraction`` of each class.

    The overall target is ``round_half_up(fraction * total)`` so the
    stratified quotas always sum to the same size an unstratified split
    would produce. Floors are assigned first; spare slots go to the
    classes with the largest fractional remainders (name breaks ties).
    """
    total = round_half_up(fraction * sum(counts.values()))
    ideal = {name: fraction * n for name, n in counts.items()}
    quota = {name: math.floor(share) for name, share in ideal.items()}
    spare = total - sum(quota.values())
    by_remainder = sorted(counts, key=lambda name: (quota[name] - ideal[name], name))
    for name in by_remainder[:spare]:
        quota[name] += 1
    return quota


@dataclasses.dataclass(frozen=True)
class SplitManifest:
    """A reproducible record of which image landed in which partition.

    Paths are stored relative to the dataset root in POSIX form, so the
    manifest stays valid when the dataset directory moves.
    """

    seed: int
    test_fraction: float
    val_fraction: float
    class_names: tuple[str, ...]
    splits: dict[str, tuple[str, ...]]

    def counts(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for split, entries in self.splits.items():
            per_class = {name: 0 for name in self.class_names}
            for entry in entries:
                per_class[entry.split("/", 1)[0]] += 1
            out[split] = per_class
        return out

    def size(self, split: str) -> int:
        return len(self.splits[split])

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "val_fraction": self.val_fraction,
            "class_names": list(self.class_names),
            "counts": self.counts(),
            "splits": {name: list(entries) for name, entries in self.splits.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        payload = json.loads(text)
        return cls(
            seed=payload["seed"],
            test_fraction=payload["test_fraction"],
            val_fraction=payload["val_fraction"],
            class_names=tuple(payload["class_names"]),
            splits={name: tuple(entries) for name, entries in payload["splits"].items()},
        )


def discover_images(dataset_root: Path) -> dict[str, list[str]]:
    """Map each class to its sorted list of root-relative image paths."""
    root = Path(dataset_root)
    if not root.is_dir():
        raise DatasetLayoutError(f"dataset root {root} is not a directory")
    found: dict[str, list[str]] = {}
    for name in CLASS_NAMES:
        class_dir = root / name
        if not class_dir.is_dir():
            raise DatasetLayoutError(f"missing class directory {class_dir}")
        entries = sorted(
            path.relative_to(root).as_posix()
            for path in class_dir.iterdir()
            if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
        )
        found[name] = entries
    return found


def prepare_splits(config: TrainConfig) -> SplitManifest:
    """Deterministic stratified split of the dataset under ``config``.

    Each class is shuffled with its own seeded generator, the test quota
    is carved off first, then the validation quota from what remains.
    The same seed always reproduces the same manifest.
    """
    files = discover_images(config.dataset_root)
    for name, entries in files.items():
        if len(entries) < MIN_IMAGES_PER_CLASS:
            raise SplitError(
                f"class {name!r} has {len(entries)} images; "
                f"need at least {MIN_IMAGES_PER_CLASS} per class to split"
            )

    shuffled: dict[str, list[str]] = {}
    for name, entries in files.items():
        order = list(entries)
        random.Random(f"{config.seed}:{name}").shuffle(order)
        shuffled[name] = order

    test_quota = allocate({name: len(v) for name, v in shuffled.items()}, config.test_fraction)
    remaining = {name: shuffled[name][test_quota[name]:] for name in shuffled}
    val_quota = allocate({name: len(v) for name, v in remaining.items()}, config.val_fraction)

    splits: dict[str, list[str]] = {name: [] for name in SPLIT_NAMES}
    for name in shuffled:
        splits["test"].extend(shuffled[name][: test_quota[name]])
        splits["val"].extend(remaining[name][: val_quota[name]])
        splits["train"].extend(remaining[name][val_quota[name]:])

    return SplitManifest(
        seed=config.seed,
        test_fraction=config.test_fraction,
        val_fraction=config.val_fraction,
        class_names=CLASS_NAMES,
        splits={name: tuple(sorted(entries)) for name, entries in splits.items()},
    )
