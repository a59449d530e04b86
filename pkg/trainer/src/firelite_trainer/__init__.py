"""Training companion to the firelite runtime.

Reproduces the transfer-learning recipe (frozen MobileNet backbone, slim
two-class head) on a fire/nonfire image folder and exports weights in
the runtime's FLW1 container, together with cross-runtime parity
fixtures.

Importing this package stays lightweight; the modules that need
TensorFlow (`model`, `data`, `train`, `export`, `fixtures`) import it on
first use.
"""

from .config import CLASS_NAMES, TrainConfig
from .errors import (
    ConfigError,
    DatasetLayoutError,
    ExportError,
    SplitError,
    TrainerError,
)
from .splits import SplitManifest, allocate, discover_images, prepare_splits

__version__ = "0.1.0"

__all__ = [
    "CLASS_NAMES",
    "ConfigError",
    "DatasetLayoutError",
    "ExportError",
    "SplitError",
    "SplitManifest",
    "TrainConfig",
    "TrainerError",
    "allocate",
    "discover_images",
    "prepare_splits",
]
