import numpy as np
import pytest

from gevspec import geometry
from gevspec.symbols import (make_analytic_transport, make_gevrey_transport,
                             make_trapped_toy)


@pytest.fixture(scope="session")
def gevrey2():
    return make_gevrey_transport(2.0)


@pytest.fixture(scope="session")
def analytic_model():
    return make_analytic_transport()


@pytest.fixture(scope="session")
def trapped_model():
    return make_trapped_toy()


@pytest.fixture(scope="session")
def escape_gevrey2(gevrey2):
    return geometry.build_escape(gevrey2)


@pytest.fixture(scope="session")
def escape_analytic(analytic_model):
    return geometry.build_escape(analytic_model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
