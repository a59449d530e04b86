"""Confusion-matrix bookkeeping, derived metrics, and directory evaluation.

Class index 0 is fire throughout: tp counts actual-fire predicted-fire and
fp counts actual-nonfire predicted-fire. The single-number precision/recall/
F1 aggregates are support-weighted means; per-class and macro views are kept
alongside so nothing is hidden by the aggregation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetLayoutError, DomainError, FireliteError
from .imaging import preprocess
from .model import ModelGraph, predict
from .weights import WeightStore

__all__ = [
    "IMAGE_SUFFIXES",
    "ConfusionMatrix",
    "ClassMetrics",
    "MetricsReport",
    "FileResult",
    "EvaluationResult",
    "compute_metrics",
    "evaluate_directory",
]

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


class ConfusionMatrix:
    """2x2 integer counts indexed [actual][predicted]."""

    def __init__(self):
        self._counts = [[0, 0], [0, 0]]

    @classmethod
    def from_counts(cls, tp: int, fn: int, fp: int, tn: int) -> "ConfusionMatrix":
        if min(tp, fn, fp, tn) < 0:
            raise DomainError("confusion counts must be non-negative")
        cm = cls()
        cm._counts = [[tp, fn], [fp, tn]]
        return cm

    def record(self, actual: int, predicted: int) -> "ConfusionMatrix":
        """Increment one cell; returns self for chaining."""
        if actual not in (0, 1) or predicted not in (0, 1):
            raise DomainError(f"class indices must be 0 or 1, got ({actual}, {predicted})")
        self._counts[actual][predicted] += 1
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        for a in (0, 1):
            for p in (0, 1):
                self._counts[a][p] += other._counts[a][p]
        return self

    @property
    def counts(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return tuple(tuple(row) for row in self._counts)

    @property
    def tp(self) -> int:
        return self._counts[0][0]

    @property
    def fn(self) -> int:
        return self._counts[0][1]

    @property
    def fp(self) -> int:
        return self._counts[1][0]

    @property
    def tn(self) -> int:
        return self._counts[1][1]

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def support(self, class_index: int) -> int:
        return sum(self._counts[class_index])

    def normalized(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Row-normalized fractions; all-zero rows stay zero."""
        out = []
        for row in self._counts:
            total = sum(row)
            out.append(tuple(v / total if total else 0.0 for v in row))
        return tuple(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and self.counts == other.counts

    def __repr__(self) -> str:
        return f"ConfusionMatrix(tp={self.tp}, fn={self.fn}, fp={self.fp}, tn={self.tn})"


def _ratio(num: int, den: int) -> float:
    """Metric cell with the 0/0 case defined as 0."""
    return num / den if den else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: tuple[ClassMetrics, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def to_dict(self, class_names=("fire", "nonfire")) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                name: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for name, m in zip(class_names, self.per_class)
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus per-class, macro, and support-weighted P/R/F1."""
    total = cm.total
    if total == 0:
        raise DomainError("cannot compute metrics for an empty confusion matrix")
    counts = cm.counts
    per_class = []
    for c in (0, 1):
        correct = counts[c][c]
        predicted = counts[0][c] + counts[1][c]
        actual = cm.support(c)
        precision = _ratio(correct, predicted)
        recall = _ratio(correct, actual)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(precision, recall, f1, actual))
    supports = [m.support for m in per_class]

    def weighted(key: str) -> float:
        return sum(s * getattr(m, key) for s, m in zip(supports, per_class)) / total
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / total,
        per_class=tuple(per_class),
        macro_precision=sum(m.precision for m in per_class) / 2,
        macro_recall=sum(m.recall for m in per_class) / 2,
        macro_f1=sum(m.f1 for m in per_class) / 2,
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
    )


@dataclass(frozen=True)
class FileResult:
    path: str
    truth: str
    predicted: str
    fire_probability: float


@dataclass(frozen=True)
class EvaluationResult:
    matrix: ConfusionMatrix
    report: MetricsReport
    files: tuple[FileResult, ...]
    warnings: tuple[str, ...]


def _class_directories(root: Path, class_names) -> list[Path]:
    dirs = []
    for name in class_names:
        path = root / name
        if not path.is_dir():
            raise DatasetLayoutError(f"expected subdirectory {name!r} under {root}")
        dirs.append(path)
    return dirs


def evaluate_directory(
    graph: ModelGraph,
    store: WeightStore,
    root: str | Path,
    threads: int = 1,
) -> EvaluationResult:
    """Classify every image under root/<class>/ and score the results.

    Ground truth is the directory name. Files that fail to read or decode
    are skipped and reported as warnings; the matrix total always equals the
    number of successfully classified images. Ordering (and therefore the
    log and the merged matrix) is lexicographic by path, independent of
    thread count.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetLayoutError(f"dataset root {root} is not a directory")
    tasks: list[tuple[Path, int]] = []
    for actual, class_dir in enumerate(_class_directories(root, graph.class_names)):
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES and path.is_file():
                tasks.append((path, actual))
    tasks.sort(key=lambda t: str(t[0]))

    def classify(task: tuple[Path, int]):
        path, actual = task
        try:
            result = predict(graph, store, preprocess(path.read_bytes()))
        except (OSError, FireliteError) as exc:
            return (path, actual, None, f"{path}: skipped ({exc})")
        return (path, actual, result, None)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(classify, tasks))
    else:
        outcomes = [classify(t) for t in tasks]

    matrix = ConfusionMatrix()
    files: list[FileResult] = []
    warnings: list[str] = []
    for path, actual, result, warning in outcomes:
        if warning is not None:
            warnings.append(warning)
            continue
        matrix.record(actual, result.class_index)
        files.append(
            FileResult(
                path=str(path),
                truth=graph.class_names[actual],
                predicted=result.label,
                fire_probability=result.probabilities[0],
            )
        )
    if matrix.total == 0:
        raise DomainError(f"no decodable images under {root}")
    return EvaluationResult(
        matrix=matrix,
        report=compute_metrics(matrix),
        files=tuple(files),
        warnings=tuple(warnings),
    )
