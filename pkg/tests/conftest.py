"""Shared fixtures: tiny datasets and pipelines that keep the numpy engine fast."""
import logging
import os

import numpy as np
import pytest

from disco.data import SynthConfig, generate_synthetic
from disco.pipeline import PreprocessConfig, SplitPipeline
from disco.training import TrainConfig

IMAGE_SIZE = 16


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs at desk scale (set PYDISCO_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get('PYDISCO_SLOW') == '1':
        return
    skip_slow = pytest.mark.skip(reason="set PYDISCO_SLOW=1 to run")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_logging():
    """Keep the library's INFO chatter out of test output."""
    logging.getLogger('disco').setLevel(logging.WARNING)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synth_cfg():
    return SynthConfig(image_size=IMAGE_SIZE, task_classes=2, sensitive_classes=2,
                       correlation=0.0, overlap=0.0, noise=0.02, seed=3)


@pytest.fixture
def tiny_data(synth_cfg):
    """Twenty-four synthetic images split 16 / 8."""
    return generate_synthetic(synth_cfg, 24).split(16)


@pytest.fixture
def tiny_pipeline():
    """A d=2 pipeline on 16 x 16 inputs; activations are 16 x 8 x 8."""
    cfg = PreprocessConfig(d=2, filters=4, input_size=IMAGE_SIZE)
    return SplitPipeline(preprocess=cfg, split_index=3, task_classes=2, seed=7)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(rho=1.0, lr=0.01, momentum=0.9, batch_size=8, phase1_epochs=1,
                       phase2_epochs=1, temperature=0.03, pruning_ratio=0.5, seed=0,
                       server_epochs=1)
