"""Shared fixtures for the trainer suite.

A single Keras model is built per session; MobileNet assembly is slow
enough that per-test builds would dominate the suite's runtime.
"""

import os

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")  # before any TF import

import pytest

from trainer_testutil import make_dataset


@pytest.fixture(scope="session")
def session_model():
    from firelite_trainer.model import build_model

    return build_model(backbone_weights="random")


@pytest.fixture()
def dataset_tree(tmp_path):
    return make_dataset(tmp_path / "data", fire=40, nonfire=40, seed=7)
