#!/usr/bin/env python3
"""Fine-tune the fire/nonfire classifier and export FLW1 weights.

Expects a dataset directory with fire/ and nonfire/ subfolders of JPEG
or PNG images. Writes the split manifest, per-epoch history CSV, and the
exported weights into --output.
"""

import argparse
import sys
from pathlib import Path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dataset_root", type=Path, help="directory with fire/ and nonfire/")
    parser.add_argument("--output", type=Path, default=Path("runs/latest"))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--patience", type=int, default=10)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument(
        "--backbone-weights",
        default="imagenet",
        help="'imagenet', 'random', or a Keras weights file for the backbone",
    )
    parser.add_argument("--weights-out", type=Path, default=None,
                        help="FLW1 output path (default: <output>/firelite.flw)")
    args = parser.parse_args(argv)

    from firelite_trainer.config import TrainConfig
    from firelite_trainer.errors import TrainerError
    from firelite_trainer.export import export_flw
    from firelite_trainer.train import train

    config = TrainConfig(
        dataset_root=args.dataset_root,
        output_dir=args.output,
        seed=args.seed,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        learning_rate=args.learning_rate,
        backbone_weights=args.backbone_weights,
    )
    try:
        result = train(config)
        weights_path = args.weights_out or config.output_dir / "firelite.flw"
        written = export_flw(result.model, weights_path)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    counts = result.manifest.counts()
    print(f"splits: train={sum(counts['train'].values())} "
          f"val={sum(counts['val'].values())} test={sum(counts['test'].values())}")
    print(f"epochs ran: {result.epochs_ran} (best epoch {result.best_epoch + 1})")
    print(f"best val accuracy: {result.best_val_accuracy:.4f}")
    print(f"test accuracy: {result.test_accuracy:.4f}")
    print(f"wrote {weights_path} ({written} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
