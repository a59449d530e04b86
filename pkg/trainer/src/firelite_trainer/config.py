"""Run configuration for the fine-tuning pipeline."""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ConfigError

CLASS_NAMES = ("fire", "nonfire")


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    """Everything one training run needs, in a single immutable record.

    ``backbone_weights`` selects the starting point for the feature
    extractor: ``"imagenet"`` downloads the published pretrained weights,
    ``"random"`` starts from a fresh initialization (useful offline and in
    tests), and any other value is treated as a path to a Keras weights
    file to load into the backbone.
    """

    dataset_root: Path
    output_dir: Path
    test_fraction: float = 0.10
    val_fraction: float = 0.10  # of what remains after the test split
    seed: int = 42
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 10  # early stop on validation loss
    learning_rate: float = 1e-3
    dropout: float = 0.5
    backbone_weights: str = "imagenet"

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_root", Path(self.dataset_root))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        for name in ("test_fraction", "val_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly in (0, 1), got {value!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size!r}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be positive, got {self.max_epochs!r}")
        if self.patience < 0:
            raise ConfigError(f"patience must be non-negative, got {self.patience!r}")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout!r}")
        if not self.backbone_weights:
            raise ConfigError("backbone_weights must be 'imagenet', 'random', or a file path")
