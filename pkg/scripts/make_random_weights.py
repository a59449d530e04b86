#!/usr/bin/env python3
"""Write a randomly initialized FLW1 weight file.

Useful for exercising the CLI and benchmarks without trained weights; the
predictions are meaningless but every structural contract holds.
"""

import argparse

import numpy as np

from firelite.imaging import PREPROCESSING_ID
from firelite.model import build_firelite
from firelite.tensor import Tensor
from firelite.weights import WeightStore, write_store


def random_store(seed: int) -> WeightStore:
    graph = build_firelite()
    rng = np.random.default_rng(seed)
    store = WeightStore(
        metadata={
            "class_names": ",".join(graph.class_names),
            "preprocessing": PREPROCESSING_ID,
            "bn_epsilon": "0.001",
        }
    )
    for name, shape in graph.weight_shapes().items():
        if name.endswith(".var"):
            values = rng.uniform(0.5, 1.5, size=shape)
        elif name.endswith(".gamma"):
            values = rng.uniform(0.75, 1.25, size=shape)
        elif name.endswith((".beta", ".mean", ".bias")):
            values = rng.normal(0.0, 0.1, size=shape)
        else:
            values = rng.normal(0.0, 0.05, size=shape)
        store.add(name, Tensor(values.astype(np.float32)))
    return store


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="target .flw path")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    args = parser.parse_args()
    store = random_store(args.seed)
    with open(args.output, "wb") as sink:
        count = write_store(store, sink)
    print(f"wrote {args.output}: {len(store)} tensors, {count:,} bytes (seed {args.seed})")


if __name__ == "__main__":
    main()
