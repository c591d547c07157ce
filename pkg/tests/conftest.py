"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from simulation.im_modem import build_psk, build_sap_table


@pytest.fixture
def rng():
    return np.random.default_rng(2019)


@pytest.fixture
def table():
    return build_sap_table(4, 2)


@pytest.fixture
def bpsk():
    return build_psk(2)
