"""Shared fixtures. Instances are immutable, so session scope is safe."""

import numpy as np
import pytest

from tikhreg import build_fredholm, decompose


@pytest.fixture(scope="session")
def fred20():
    return build_fredholm(20)


@pytest.fixture(scope="session")
def fred100():
    return build_fredholm(100)


@pytest.fixture(scope="session")
def fred200():
    return build_fredholm(200)


@pytest.fixture(scope="session")
def dec200(fred200):
    return decompose(fred200)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=20260817))
