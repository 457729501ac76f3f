import numpy as np
import pytest

from eprghost import CorrelationParams, ExperimentGeometry

REF_SIGMAS = (1.489, 51.63)


@pytest.fixture
def geometry():
    return ExperimentGeometry()


@pytest.fixture
def ref_params():
    return CorrelationParams(*REF_SIGMAS)


@pytest.fixture
def wide_grid():
    return np.linspace(-6.0, 6.0, 51)


@pytest.fixture
def fringe_grid():
    return np.round(np.arange(-0.03, 0.0305, 0.001), 12)
