"""FireLite: a small two-class fire/non-fire image classifier.

A MobileNet-v1 backbone with a 32-unit head, run by a pure-numpy inference
engine. Weights travel in the FLW1 container format; the `firelite` CLI
wraps classify/evaluate/bench/inspect on top of the modules here.
"""

from .errors import FireliteError
from .imaging import PREPROCESSING_ID, decode_image, preprocess, resize_bilinear
from .metrics import ConfusionMatrix, compute_metrics, evaluate_directory
from .model import build_firelite, count_params, fold_graph, forward, predict
from .tensor import Tensor
from .weights import WeightStore, read_store, validate_against, write_store

__version__ = "0.1.0"

__all__ = [
    "FireliteError",
    "PREPROCESSING_ID",
    "decode_image",
    "preprocess",
    "resize_bilinear",
    "ConfusionMatrix",
    "compute_metrics",
    "evaluate_directory",
    "build_firelite",
    "count_params",
    "fold_graph",
    "forward",
    "predict",
    "Tensor",
    "WeightStore",
    "read_store",
    "validate_against",
    "write_store",
    "__version__",
]
