import numpy as np
import pytest

from config import settings
from models.attack import AttackConfig
from models.dataset import Dataset, ExperimentData
from models.layer import mlp_layers
from services.data_io import make_blobs, split
from services.network import init_network


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setattr(settings, "SHOW_PROGRESS", False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def blobs() -> Dataset:
    return make_blobs(n=200, k=2, d=2, spread=0.05, seed=7)


@pytest.fixture
def blob_data(blobs) -> ExperimentData:
    train, held_out = split(blobs, 0.25, seed=3)
    return ExperimentData(train=train, eval=held_out)


@pytest.fixture
def small_mlp():
    return init_network(mlp_layers(4, [6], 3), seed=11)


@pytest.fixture
def weak_attack() -> AttackConfig:
    return AttackConfig(epsilon=0.1, step_size=0.025, num_steps=5, num_restarts=2, seed=5)
