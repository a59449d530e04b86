"""Command-line surface: classify, evaluate, bench, inspect.

Exit codes are stable API:
  0  success
  2  input problems (missing or undecodable image)
  3  weight-store problems (unreadable, corrupt, wrong contract)
  4  usage errors (bad flags or arguments)
  5  dataset layout problems

JSON output of every subcommand validates against the schema of the same
name in the schemas/ package directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import statistics
import sys
import time
from importlib import resources
from pathlib import Path

from .errors import (
    ConfigError,
    DataError,
    DatasetLayoutError,
    DecodeError,
    DomainError,
    ShapeError,
    WeightError,
)
from .imaging import PREPROCESSING_ID, preprocess
from .metrics import EvaluationResult, evaluate_directory
from .model import (
    ModelGraph,
    build_firelite,
    count_params,
    fold_graph,
    forward,
    peak_activation_bytes,
    predict,
)
from .weights import WeightStore, read_store_bytes, validate_against

__all__ = ["main", "entry", "load_schema", "ENV_WEIGHTS"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_WEIGHTS = 3
EXIT_USAGE = 4
EXIT_LAYOUT = 5

ENV_WEIGHTS = "FIRELITE_WEIGHTS"


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 4."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want a typed error
        raise UsageError(message)


def load_schema(name: str) -> dict:
    """Schema for one subcommand's JSON output (classify/evaluate/bench/inspect)."""
    path = resources.files(__package__) / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


def _positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _non_negative_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value!r}")
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {n}")
    return n


def _threads(value: str) -> int:
    if value == "auto":
        return max(os.cpu_count() or 1, 1)
    return _positive_int(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--weights",
        metavar="PATH",
        help=f"FLW1 weight file (default: ${ENV_WEIGHTS})",
    )
    common.add_argument(
        "--format",
        choices=("text", "json"),
        default="text",
        help="output format (default: text)",
    )

    parser = _Parser(
        prog="firelite",
        description="Two-class fire/non-fire image classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("classify", parents=[common], help="classify one image")
    p.add_argument("image", help="JPEG or PNG file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common], help="score a labeled dataset directory")
    p.add_argument("dataset", help="directory with one subdirectory per class")
    p.add_argument(
        "--threads",
        type=_threads,
        default="auto",
        help="worker threads, or 'auto' (default)",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", parents=[common], help="measure latency and memory")
    p.add_argument("image", help="JPEG or PNG file to run repeatedly")
    p.add_argument("--iterations", type=_positive_int, default=100, help="timed runs (default: 100)")
    p.add_argument("--warmup", type=_non_negative_int, default=10, help="untimed runs first (default: 10)")
    p.add_argument("--fold", action="store_true", help="fold batch norms into the preceding layers")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", parents=[common], help="summarize a weight file")
    p.set_defaults(func=cmd_inspect)

    return parser


def _load_weights(args) -> tuple[WeightStore, str]:
    path = args.weights or os.environ.get(ENV_WEIGHTS)
    if not path:
        raise UsageError(f"no weights file given: pass --weights or set {ENV_WEIGHTS}")
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise WeightError(f"cannot read weights file {path}: {exc}") from exc
    return read_store_bytes(data), hashlib.sha256(data).hexdigest()


def _graph_for(store: WeightStore) -> ModelGraph:
    names = tuple(store.metadata.get("class_names", "").split(","))
    try:
        return build_firelite(class_names=names)
    except ConfigError as exc:
        raise WeightError(f"weight metadata class_names is unusable: {exc}") from exc


def _prepare_inference(args) -> tuple[ModelGraph, WeightStore, str]:
    """Load weights and refuse anything the engine cannot faithfully run."""
    store, sha = _load_weights(args)
    stamped = store.metadata.get("preprocessing")
    if stamped != PREPROCESSING_ID:
        raise WeightError(
            f"weight file was exported for preprocessing {stamped!r}; "
            f"this engine implements {PREPROCESSING_ID!r}"
        )
    graph = _graph_for(store)
    report = validate_against(store, graph)
    if report.missing or report.mismatched:
        parts = []
        if report.missing:
            parts.append(f"missing {', '.join(report.missing[:3])}" + ("..." if len(report.missing) > 3 else ""))
        for name, want, got in report.mismatched[:3]:
            parts.append(f"{name} has shape {got}, expected {want}")
        raise WeightError("weight store does not satisfy the model graph: " + "; ".join(parts))
    return graph, store, sha


def _read_image(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DecodeError(f"cannot read image {path}: {exc}") from exc


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def cmd_classify(args) -> int:
    graph, store, sha = _prepare_inference(args)
    result = predict(graph, store, preprocess(_read_image(args.image)))
    if args.format == "json":
        _emit(
            {
                "label": result.label,
                "class_index": result.class_index,
                "probabilities": list(result.probabilities),
                "model_sha": sha,
            }
        )
    else:
        print(f"{result.label} (p={result.probabilities[result.class_index]:.3f})")
        print(
            "probabilities: "
            + "  ".join(f"{n}={p:.6f}" for n, p in zip(graph.class_names, result.probabilities))
        )
    return EXIT_OK


def _matrix_lines(result: EvaluationResult, class_names) -> list[str]:
    width = max(len(n) for n in class_names) + 2
    lines = ["confusion matrix (rows actual, columns predicted)"]
    header = " " * width + "".join(f"{n:>{width}}" for n in class_names)
    lines.append(header)
    for name, row in zip(class_names, result.matrix.counts):
        lines.append(f"{name:>{width}}" + "".join(f"{v:>{width}}" for v in row))
    lines.append("row-normalized")
    lines.append(header)
    for name, row in zip(class_names, result.matrix.normalized()):
        lines.append(f"{name:>{width}}" + "".join(f"{v:>{width}.4f}" for v in row))
    return lines


def cmd_evaluate(args) -> int:
    graph, store, sha = _prepare_inference(args)
    result = evaluate_directory(graph, store, args.dataset, threads=args.threads)
    report = result.report
    if args.format == "json":
        _emit(
            {
                "matrix": {
                    "counts": [list(row) for row in result.matrix.counts],
                    "normalized": [list(row) for row in result.matrix.normalized()],
                    "tp": result.matrix.tp,
                    "fn": result.matrix.fn,
                    "fp": result.matrix.fp,
                    "tn": result.matrix.tn,
                    "total": result.matrix.total,
                },
                "metrics": report.to_dict(graph.class_names),
                "files": [
                    {
                        "path": f.path,
                        "truth": f.truth,
                        "predicted": f.predicted,
                        "fire_probability": f.fire_probability,
                    }
                    for f in result.files
                ],
                "warnings": list(result.warnings),
                "model_sha": sha,
            }
        )
        return EXIT_OK
    lines = _matrix_lines(result, graph.class_names)
    lines.append(f"accuracy: {report.accuracy:.4f}")
    for name, m in zip(graph.class_names, report.per_class):
        lines.append(
            f"{name:>9}: precision {m.precision:.4f}  recall {m.recall:.4f}  "
            f"f1 {m.f1:.4f}  support {m.support}"
        )
    lines.append(
        f"    macro: precision {report.macro_precision:.4f}  "
        f"recall {report.macro_recall:.4f}  f1 {report.macro_f1:.4f}"
    )
    lines.append(
        f" weighted: precision {report.weighted_precision:.4f}  "
        f"recall {report.weighted_recall:.4f}  f1 {report.weighted_f1:.4f}"
    )
    lines.append(f"images: {result.matrix.total}  warnings: {len(result.warnings)}")
    for warning in result.warnings:
        lines.append(f"warning: {warning}")
    print("\n".join(lines))
    return EXIT_OK


def _percentile(sorted_samples: list[float], q: float) -> float:
    """Nearest-rank percentile; q in (0, 100]."""
    rank = max(1, math.ceil(q / 100.0 * len(sorted_samples)))
    return sorted_samples[rank - 1]


def cmd_bench(args) -> int:
    graph, store, sha = _prepare_inference(args)
    if args.fold:
        graph, store = fold_graph(graph, store)
    data = _read_image(args.image)
    preprocess(data)  # fail on undecodable input before any timing
    for _ in range(args.warmup):
        forward(graph, store, preprocess(data))
    samples_ms: list[float] = []
    for _ in range(args.iterations):
        start = time.perf_counter()
        forward(graph, store, preprocess(data))
        samples_ms.append((time.perf_counter() - start) * 1000.0)
    ordered = sorted(samples_ms)
    mean = statistics.fmean(samples_ms)
    weights_bytes = store.tensor_bytes()
    peak = peak_activation_bytes(graph)
    payload = {
        "model_sha": sha,
        "iterations": args.iterations,
        "warmup": args.warmup,
        "samples": len(samples_ms),
        "latency_ms": {
            "mean": mean,
            "p50": _percentile(ordered, 50),
            "p95": _percentile(ordered, 95),
        },
        "throughput_ips": 1000.0 / mean,
        "memory": {
            "weights_bytes": weights_bytes,
            "peak_activation_bytes": peak,
            "total_bytes": weights_bytes + peak,
        },
        "folded": bool(args.fold),
    }
    if args.format == "json":
        _emit(payload)
    else:
        lat = payload["latency_ms"]
        mem = payload["memory"]
        print(
            f"latency: mean {lat['mean']:.2f} ms  p50 {lat['p50']:.2f} ms  "
            f"p95 {lat['p95']:.2f} ms  ({payload['samples']} samples, "
            f"{args.warmup} warmup)"
        )
        print(f"throughput: {payload['throughput_ips']:.2f} images/s")
        print(
            f"memory: weights {mem['weights_bytes']:,} B + peak activations "
            f"{mem['peak_activation_bytes']:,} B = {mem['total_bytes']:,} B"
            + ("  [folded]" if args.fold else "")
        )
    return EXIT_OK


def cmd_inspect(args) -> int:
    store, sha = _load_weights(args)
    graph = build_firelite()
    counts = count_params(graph)
    report = validate_against(store, graph)
    if args.format == "json":
        _emit(
            {
                "model_sha": sha,
                "metadata": dict(store.metadata),
                "tensors": [
                    {"name": name, "shape": list(t.shape), "bytes": 4 * t.size}
                    for name, t in store.tensors.items()
                ],
                "tensor_count": len(store),
                "payload_bytes": store.tensor_bytes(),
                "params": {
                    "total": counts.total,
                    "trainable": counts.trainable,
                    "non_trainable": counts.non_trainable,
                },
                "validation": report.to_dict(),
            }
        )
        return EXIT_OK
    lines = [f"model_sha: {sha}", "metadata:"]
    for key in sorted(store.metadata):
        lines.append(f"  {key} = {store.metadata[key]}")
    lines.append(f"tensors: {len(store)} entries, {store.tensor_bytes():,} payload bytes")
    for name, tensor in store.tensors.items():
        shape = "x".join(str(d) for d in tensor.shape)
        lines.append(f"  {name:<24} {shape:>14} {4 * tensor.size:>12,} B")
    lines.append(
        f"canonical graph parameters: total {counts.total:,}  "
        f"trainable {counts.trainable:,}  non-trainable {counts.non_trainable:,}"
    )
    if report.ok:
        lines.append("validation: ok")
    else:
        lines.append(
            f"validation: {len(report.missing)} missing, "
            f"{len(report.mismatched)} mismatched, {len(report.unused)} unused"
        )
        for name in report.missing:
            lines.append(f"  missing    {name}")
        for name, want, got in report.mismatched:
            lines.append(f"  mismatched {name}: found {got}, expected {want}")
        for name in report.unused:
            lines.append(f"  unused     {name}")
    print("\n".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DatasetLayoutError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_LAYOUT
    except DomainError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_LAYOUT
    except (WeightError, ShapeError, DataError) as exc:
        print(f"weights error: {exc}", file=sys.stderr)
        return EXIT_WEIGHTS
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
