import numpy as np
import pytest

from specpart.grids import DomainSpec, build_mask


@pytest.fixture(scope="session")
def square_mask_201():
    return build_mask(DomainSpec.square(), 201)


@pytest.fixture(scope="session")
def disk_mask_201():
    return build_mask(DomainSpec.disk(), 201)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
