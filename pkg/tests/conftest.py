import numpy as np
import pytest

from robustsvm import Diminishing, RBFKernel, TrainConfig, train
from robustsvm.synthetic import gaussian_blobs


@pytest.fixture(scope="session")
def blobs_small():
    return gaussian_blobs(120, 5)


@pytest.fixture(scope="session")
def toy_model(blobs_small):
    cfg = TrainConfig(
        C=2.0,
        epsilon=0.2,
        schedule=Diminishing(1.0),
        batch_size=8,
        block_size=24,
        iterations=40,
        master_seed=9,
    )
    result = train(blobs_small.features, blobs_small.labels, cfg, RBFKernel(gamma=4.0))
    return result.model


@pytest.fixture()
def rng_np():
    return np.random.default_rng(1234)
