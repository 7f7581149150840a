import numpy as np
import pytest

from relgrid.boxworld import BoxWorldConfig, BoxWorldEnv
from relgrid.rgw import RgwConfig, RgwEnv


@pytest.fixture
def bw1():
    return BoxWorldEnv(BoxWorldConfig.preset(1))


@pytest.fixture
def rgw_env():
    return RgwEnv(RgwConfig.preset(2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
