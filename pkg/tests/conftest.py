from __future__ import annotations

import numpy as np
import pytest

from pacal.gallery import make, standard_spaces


@pytest.fixture(scope="session")
def flat():
    return make("flat", 2).system


@pytest.fixture(scope="session")
def rotation():
    return make("rotation2d", omega=[1.0, 0.0])


@pytest.fixture(scope="session")
def scaling():
    return make("scaling", 2, lam=[1.0, 0.0])


@pytest.fixture(scope="session")
def mixed():
    return make("mixed_exp2d")


@pytest.fixture(scope="session")
def kinked():
    return make("kinked", 2)


@pytest.fixture(scope="session")
def gallery():
    return standard_spaces()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

