"""Shared helpers for the test suite."""

import os

import numpy as np
import pytest

import tiksplit


def data_path(name):
    """Path of a bundled sample file inside the installed package."""
    return os.path.join(os.path.dirname(tiksplit.__file__), "data", name)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
