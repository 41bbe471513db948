import numpy as np
import pytest


def random_layers(count, seed, max_dim=12):
    """Random dense layers of assorted shapes, including thin ones."""
    rng = np.random.default_rng(seed)
    layers = []
    for _ in range(count):
        m, n = rng.integers(1, max_dim + 1, size=2)
        layers.append(rng.normal(size=(m, n)) * rng.choice([1e-3, 1.0, 50.0]))
    return layers


@pytest.fixture
def k22():
    return np.array([[1.0, 0.5], [0.25, 0.75]])
