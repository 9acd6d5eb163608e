"""
Shared fixtures for the test suite.
"""
import math

import numpy as np
import pytest

from app.core.log import configure_logging
from app.models.measurement import MeasurementSet, Povm
from app.services.hermitian import qubit_effect

SQRT_HALF = 1 / math.sqrt(2)


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging("WARNING")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def dichotomic(vec) -> Povm:
    v = np.asarray(vec, dtype=float)
    return Povm([qubit_effect(v), qubit_effect(-v)])


def unbiased_set(*vectors) -> MeasurementSet:
    return MeasurementSet([dichotomic(v) for v in vectors])
