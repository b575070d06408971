import numpy as np
import pytest

from qcomposite_kconn.model.graph_model import Seed


@pytest.fixture
def seed() -> Seed:
    return Seed(master=20240917)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
