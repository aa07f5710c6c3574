import numpy as np
import pytest

from tracelab.field_core import build_context
from tracelab.trace_fns import kloosterman_batch


@pytest.fixture(scope="session")
def ctx13():
    return build_context(13)


@pytest.fixture(scope="session")
def ctx31():
    return build_context(31)


@pytest.fixture(scope="session")
def ctx101():
    return build_context(101)


@pytest.fixture(scope="session")
def kl2_101(ctx101):
    return kloosterman_batch(ctx101, 2)


@pytest.fixture(scope="session")
def kl3_101(ctx101):
    return kloosterman_batch(ctx101, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
