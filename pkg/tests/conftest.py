import logging

import numpy as np
import pytest

import ozmm
from tests import fixtures

logger = logging.getLogger()


@pytest.fixture(scope="function")
def set_environment():
    with ozmm.utils.set_env(fixtures.ENV):
        yield


@pytest.fixture(scope="function")
def rng():
    return np.random.Generator(np.random.PCG64(fixtures.SEED))


@pytest.fixture(scope="function")
def sweep_config_file(tmp_path):
    path = tmp_path / "sweep.env"
    path.write_text("\n".join(f"{k}={v}" for k, v in fixtures.SWEEP_CONFIG.items()) + "\n")
    return str(path)
