"""Shared fixtures: the canonical graph and a seeded random weight store."""

import numpy as np
import pytest
from PIL import Image

from engine_testutil import make_random_store
from firelite.model import build_firelite
from firelite.weights import write_store


@pytest.fixture(scope="session")
def canonical_graph():
    return build_firelite()


@pytest.fixture(scope="session")
def canonical_store(canonical_graph):
    return make_random_store(canonical_graph, seed=42)


@pytest.fixture(scope="session")
def weights_path(tmp_path_factory, canonical_store):
    path = tmp_path_factory.mktemp("weights") / "canonical.flw"
    with open(path, "wb") as sink:
        write_store(canonical_store, sink)
    return path


@pytest.fixture(scope="session")
def sample_image(tmp_path_factory):
    path = tmp_path_factory.mktemp("images") / "sample.png"
    rng = np.random.default_rng(11)
    Image.fromarray(rng.integers(0, 256, (64, 48, 3), dtype=np.uint8)).save(path)
    return path
