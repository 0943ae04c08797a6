"""Shared fixtures: seeded models are expensive enough to build once."""

import numpy as np
import pytest

from tfmlp.model import DEFAULT_BSS, DEFAULT_TSE, init_random
from tfmlp.quant import quantize_model


@pytest.fixture(scope="session")
def bss_model():
    return init_random(DEFAULT_BSS, seed=7)


@pytest.fixture(scope="session")
def tse_model():
    return init_random(DEFAULT_TSE, seed=7)


@pytest.fixture(scope="session")
def calib_signal():
    # 1 s of low-level noise; enough chunks to populate every activation range
    rng = np.random.default_rng(501)
    return (rng.standard_normal(16000) * 0.1).astype(np.float32)


@pytest.fixture(scope="session")
def int8_model(bss_model, calib_signal):
    return quantize_model(bss_model, "int8", [calib_signal])


@pytest.fixture(scope="session")
def embedding():
    return np.random.default_rng(9).standard_normal(256).astype(np.float32)
