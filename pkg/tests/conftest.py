import numpy as np
import pytest

from banditmix.mixture import BanditConfig
from banditmix.registry import ArmRegistry


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_registry():
    return ArmRegistry.from_counts({"a": 1000, "b": 3000, "c": 6000})


@pytest.fixture
def small_config():
    return BanditConfig(num_arms=3, total_steps=100, update_interval=10, batch_size=8)
