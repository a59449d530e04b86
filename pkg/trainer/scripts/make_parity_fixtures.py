#!/usr/bin/env python3
"""Generate the cross-runtime parity fixture directory.

Writes N synthetic PNGs, an FLW1 weight file, and the framework's
recorded softmax outputs. The runtime's test suite replays the images
against the weights and checks the probabilities line up.
"""

import argparse
from pathlib import Path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path, help="fixture directory to create")
    parser.add_argument("--seed", type=int, default=2025)
    parser.add_argument("--count", type=int, default=32)
    parser.add_argument("--tensors", action="store_true",
                        help="also write the preprocessed input batch as preprocessed.npz")
    args = parser.parse_args(argv)

    from firelite_trainer.fixtures import generate

    summary = generate(args.out_dir, seed=args.seed, count=args.count,
                       write_tensors=args.tensors)
    print(f"wrote {summary['count']} images + weights ({summary['weights_bytes']} bytes) "
          f"to {args.out_dir}")
    print(f"probability spread across images: {summary['probability_spread']:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
