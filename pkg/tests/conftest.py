import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from usvyaw import (IDENTIFIED_MODEL, TimeSeriesDataset, discretize_zoh, simulate,  # noqa: E402
                    square_wave)

DT = 0.05


@pytest.fixture
def reference_tf():
    return IDENTIFIED_MODEL


@pytest.fixture(scope="session")
def default_wave():
    return square_wave(50.0, 20.0, 200.0, DT, 0.5)


@pytest.fixture(scope="session")
def noiseless_dataset(default_wave):
    psi, rate = simulate(discretize_zoh(IDENTIFIED_MODEL, DT), default_wave)
    return TimeSeriesDataset(DT, 0.0, default_wave, psi, rate, "reference_tf noiseless")


def rel_err(estimate, truth):
    return np.abs(np.asarray(estimate) / np.asarray(truth) - 1.0)
