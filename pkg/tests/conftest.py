import numpy as np
import pytest

from dartprune.logging_config import configure_logging

configure_logging(log_level="WARNING")


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)
